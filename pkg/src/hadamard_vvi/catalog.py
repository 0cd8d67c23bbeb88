"""Built-in test problems with closed-form convexificators.

Convexificator generators are tangent vectors, paired through the metric.  On
the half-plane a chart differential ``(a, b)`` therefore enters as the tangent
``y**2 * (a, b)``; see :func:`example41_table` for the chart-differential form.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import partial

import numpy as np

from .convexity import VectorFunction
from .manifolds import ContractViolation, Euclidean, Manifold, PoincareHalfPlane, Point
from .nonsmooth import Convexificator, ScalarFunction, sample_unit_directions
from .report import stream

__all__ = [
    "Region",
    "CatalogEntry",
    "CATALOG_IDS",
    "catalog_lookup",
    "list_catalog",
    "sample_region",
    "sample_region_coords",
    "sample_pairs",
    "candidate_grid",
    "example41_convexificator",
    "example41_table",
    "AXIS_TOL",
]

AXIS_TOL = 1e-12
HALF_PLANE = PoincareHalfPlane()


@dataclass(frozen=True)
class Region:
    """Closed geodesic ball; geodesically convex on a Hadamard manifold."""

    center: Point
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ContractViolation("region radius must be > 0")

    @property
    def manifold(self) -> Manifold:
        return self.center.manifold

    def contains(self, x, slack: float = 1e-9) -> np.ndarray:
        d = self.manifold.dist(self.center.coords, np.asarray(x, float))
        return d <= self.radius * (1.0 + slack) + slack


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    manifold: Manifold
    F: VectorFunction
    region: Region
    convexity_status: str
    description: str = ""
    kinked: bool = False


# --- component functions (module level so entries pickle) ------------------


def _sign_rows(s, axis):
    """(N, 2) signs: first/second generator; on the axis both signs."""
    first = np.where(axis, 1.0, s)
    second = np.where(axis, -1.0, s)
    return first, second


def _psi1_value(x):
    return np.abs(x[:, 0]) + x[:, 1] * np.log(x[:, 1])


def _psi2_value(x):
    return np.abs(x[:, 0]) + x[:, 1] ** 2


def _ex41_generators(x, which):
    x = np.atleast_2d(x)
    y = x[:, 1]
    axis = np.abs(x[:, 0]) <= AXIS_TOL
    s1, s2 = _sign_rows(np.sign(x[:, 0]), axis)
    second = 1.0 + np.log(y) if which == 1 else 2.0 * y
    table = np.empty((len(x), 2, 2))
    table[:, 0, 0] = s1
    table[:, 1, 0] = s2
    table[:, :, 1] = second[:, None]
    return (y**2)[:, None, None] * table


def _sqdist_value(x, o, sign):
    return sign * HALF_PLANE.dist(x, np.asarray(o)) ** 2


def _sqdist_generators(x, o, sign):
    x = np.atleast_2d(x)
    g = -2.0 * sign * HALF_PLANE.log(x, np.broadcast_to(np.asarray(o, float), x.shape))
    return g[:, None, :]


def _quad_value(x, c):
    return np.sum((x - np.asarray(c)) ** 2, axis=-1)


def _quad_generators(x, c):
    x = np.atleast_2d(x)
    return (2.0 * (x - np.asarray(c)))[:, None, :]


def _abs_value(x):
    return np.abs(x[:, 0])


def _abs_generators(x):
    x = np.atleast_2d(x)
    axis = np.abs(x[:, 0]) <= AXIS_TOL
    s1, s2 = _sign_rows(np.sign(x[:, 0]), axis)
    return np.stack([s1, s2], axis=1)[:, :, None]


def _build() -> dict[str, CatalogEntry]:
    o = (0.0, 1.0)
    H = HALF_PLANE
    E1 = Euclidean(1)
    E2 = Euclidean(2)
    entries = [
        CatalogEntry(
            id="example-4.1",
            manifold=H,
            F=VectorFunction(
                (
                    ScalarFunction(H, _psi1_value, partial(_ex41_generators, which=1), "|p1| + p2 ln p2"),
                    ScalarFunction(H, _psi2_value, partial(_ex41_generators, which=2), "|p1| + p2^2"),
                ),
                "example-4.1",
            ),
            region=Region(Point(H, o), 2.0),
            convexity_status="nonconvex",
            description="(|p1| + p2 ln p2, |p1| + p2^2) on the half-plane with piecewise convexificators; "
            "convexity check fails",
            kinked=True,
        ),
        CatalogEntry(
            id="sqdist-halfplane",
            manifold=H,
            F=VectorFunction(
                (ScalarFunction(H, partial(_sqdist_value, o=o, sign=1.0), partial(_sqdist_generators, o=o, sign=1.0), "d^2(., o)"),),
                "sqdist-halfplane",
            ),
            region=Region(Point(H, o), 2.0),
            convexity_status="strictly-convex",
            description="squared distance to o=(0,1) on the half-plane; convexificator {-2 log_p o}",
        ),
        CatalogEntry(
            id="neg-sqdist-halfplane",
            manifold=H,
            F=VectorFunction(
                (
                    ScalarFunction(
                        H, partial(_sqdist_value, o=o, sign=-1.0), partial(_sqdist_generators, o=o, sign=-1.0), "-d^2(., o)"
                    ),
                ),
                "neg-sqdist-halfplane",
            ),
            region=Region(Point(H, o), 2.0),
            convexity_status="nonconvex",
            description="negated squared distance to o=(0,1); convexificator {+2 log_p o}; nonconvex control",
        ),
        CatalogEntry(
            id="euclid-quad2",
            manifold=E2,
            F=VectorFunction(
                (
                    ScalarFunction(E2, partial(_quad_value, c=(0.0, 0.0)), partial(_quad_generators, c=(0.0, 0.0)), "|x|^2"),
                    ScalarFunction(E2, partial(_quad_value, c=(1.0, 0.0)), partial(_quad_generators, c=(1.0, 0.0)), "|x - e1|^2"),
                ),
                "euclid-quad2",
            ),
            region=Region(Point(E2, (0.5, 0.0)), 1.5),
            convexity_status="strictly-convex",
            description="(x1^2 + x2^2, (x1 - 1)^2 + x2^2) on R^2; Pareto set [0,1] x {0}",
        ),
        CatalogEntry(
            id="euclid-pareto-1d",
            manifold=E1,
            F=VectorFunction(
                (
                    ScalarFunction(E1, partial(_quad_value, c=(0.0,)), partial(_quad_generators, c=(0.0,)), "x^2"),
                    ScalarFunction(E1, partial(_quad_value, c=(2.0,)), partial(_quad_generators, c=(2.0,)), "(x - 2)^2"),
                ),
                "euclid-pareto-1d",
            ),
            region=Region(Point(E1, (1.0,)), 2.0),
            convexity_status="strictly-convex",
            description="(x^2, (x - 2)^2) on R; Pareto set [0, 2]",
        ),
        CatalogEntry(
            id="euclid-abs",
            manifold=E1,
            F=VectorFunction((ScalarFunction(E1, _abs_value, _abs_generators, "|x|"),), "euclid-abs"),
            region=Region(Point(E1, (0.0,)), 2.0),
            convexity_status="convex",
            description="|x| on R with convexificator {-1, +1} at the kink; convex, not strictly",
            kinked=True,
        ),
    ]
    return {e.id: e for e in entries}


_CATALOG = _build()
CATALOG_IDS = tuple(_CATALOG)


def catalog_lookup(id: str) -> CatalogEntry:
    try:
        return _CATALOG[id]
    except KeyError:
        raise KeyError(f"unknown catalog id {id!r}; available: {', '.join(CATALOG_IDS)}") from None


def list_catalog() -> list[CatalogEntry]:
    return list(_CATALOG.values())


def example41_table(which: int, p: Point) -> np.ndarray:
    """Rows of the piecewise table for component ``which`` in chart-differential form."""
    if which not in (1, 2):
        raise ContractViolation("which must be 1 or 2")
    x1, y = p.coords
    second = 1.0 + np.log(y) if which == 1 else 2.0 * y
    if abs(x1) <= AXIS_TOL:
        return np.array([[1.0, second], [-1.0, second]])
    return np.array([[np.sign(x1), second]])


def example41_convexificator(which: int, p: Point) -> Convexificator:
    """Convexificator of component ``which`` at ``p`` as metric tangents ``y**2 * table``."""
    if p.manifold != HALF_PLANE:
        raise ContractViolation("example41_convexificator needs a half-plane point")
    rows = example41_table(which, p)
    return Convexificator(p, p.coords[1] ** 2 * rows)


def sample_region(region: Region, n: int, seed, name: str = "region") -> list[Point]:
    """``n`` points ``exp_center(r u)``: ``u`` metric-unit, ``r = radius * U**(1/dim)``."""
    return [Point(region.manifold, x) for x in sample_region_coords(region, n, seed, name)]


def sample_region_coords(region: Region, n: int, seed, name: str = "region") -> np.ndarray:
    if n < 1:
        raise ContractViolation("sample count must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else stream(seed, name)
    M = region.manifold
    c = region.center.coords
    u = sample_unit_directions(M, c, n, rng)
    r = region.radius * rng.random(n) ** (1.0 / M.dim)
    return M.exp(np.broadcast_to(c, (n, M.dim)), r[:, None] * u)


def sample_pairs(region: Region, n: int, seed, name: str = "pairs") -> tuple[np.ndarray, np.ndarray]:
    rng = seed if isinstance(seed, np.random.Generator) else stream(seed, name)
    P = sample_region_coords(region, n, rng)
    Q = sample_region_coords(region, n, rng)
    return P, Q


def candidate_grid(region: Region, n: int) -> np.ndarray:
    """``n`` deterministic points of a square lattice in normal coordinates at the center.

    The lattice spacing is the smallest (on a 1e-3 relative ladder) for which
    the ball holds at least ``n`` nodes; the ``n`` nodes closest to the center
    are kept, ties broken by angle (by coordinate in one dimension).  The
    lattice axes pass through the center, so the center is always a node.
    """
    if n < 1:
        raise ContractViolation("candidate grid needs n >= 1")
    M = region.manifold
    c = region.center.coords
    R = region.radius
    basis = np.eye(M.dim) / np.sqrt(M.inner(c, np.eye(M.dim)[:1], np.eye(M.dim)[:1]))[0]
    h = 2.0 * R
    while True:
        k = int(np.floor(R / h))
        ax = np.arange(-k, k + 1) * h
        g = np.stack(np.meshgrid(*([ax] * M.dim), indexing="ij"), axis=-1).reshape(-1, M.dim)
        g = g[np.linalg.norm(g, axis=1) <= R * (1 + 1e-12)]
        if len(g) >= n:
            break
        h *= 0.999
    ang = np.arctan2(g[:, 1], g[:, 0]) if M.dim > 1 else g[:, 0]
    order = np.lexsort((ang, np.round(np.linalg.norm(g, axis=1), 12)))
    nodes = g[order[:n]]
    vec = nodes @ basis
    return M.exp(np.broadcast_to(c, vec.shape), vec)

