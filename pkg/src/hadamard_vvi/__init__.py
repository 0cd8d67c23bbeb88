"""Convexificator-based nonsmooth analysis and vector variational inequalities on Hadamard manifolds."""

from .catalog import (
    CatalogEntry,
    Region,
    candidate_grid,
    catalog_lookup,
    example41_convexificator,
    example41_table,
    list_catalog,
    sample_region,
)
from .convexity import VectorFunction, convexity_check, monotonicity_check, pairing, secant_check
from .manifolds import (
    ContractViolation,
    Euclidean,
    GeodesicSplit,
    GeometryTolerance,
    PoincareHalfPlane,
    Point,
    Tangent,
    distance,
    exp_map,
    log_map,
    metric_inner,
    parallel_transport,
    split_geodesic,
)
from .nonsmooth import (
    Convexificator,
    DiniEstimate,
    DiniProbeError,
    DiniSchedule,
    MvtWitness,
    ScalarFunction,
    dini_estimate,
    lower_convexificator_check,
    mvt_witness,
    upper_convexificator_check,
)
from .report import CheckReport
from .vvi import (
    Cone,
    EfficiencyVerdict,
    VviVerdict,
    cone_margin,
    efficiency_check,
    minty_check,
    relation_suite,
    stampacchia_check,
    vvi_search,
    weak_minty_check,
    weak_stampacchia_check,
)

__version__ = "0.1.0"
