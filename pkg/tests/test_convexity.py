import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hadamard_vvi.catalog import CATALOG_IDS, catalog_lookup, sample_pairs, sample_region_coords
from hadamard_vvi.convexity import (
    CHECK_TOL,
    STRICT_TOL,
    VectorFunction,
    convexity_check,
    monotonicity_check,
    pairing,
    secant_check,
)
from hadamard_vvi.manifolds import ContractViolation, Euclidean, PoincareHalfPlane, Point, Tangent
from hadamard_vvi.nonsmooth import ScalarFunction

H = PoincareHalfPlane()
E1 = Euclidean(1)
E2 = Euclidean(2)


def sq_norm(M, sign=1.0):
    f = ScalarFunction(
        M,
        lambda x: sign * np.sum(x * x, axis=-1),
        lambda x: (2.0 * sign * np.atleast_2d(x))[:, None, :],
        "±|x|^2",
    )
    return VectorFunction((f,), "sq")


SQ2 = sq_norm(E2)
NEG_SQ2 = sq_norm(E2, -1.0)
NEG_SQ1 = sq_norm(E1, -1.0)
SQDIST = catalog_lookup("sqdist-halfplane")


# --- pairing ----------------------------------------------------------------


def _two_component(M):
    f = ScalarFunction(M, lambda x: x[:, 0], lambda x: np.zeros((len(x), 1, M.dim)))
    return VectorFunction((f, f))


def test_pairing_zero_direction():
    p = Point(E2, (0.0, 0.0))
    F = _two_component(E2)
    v = pairing(F, [Tangent(p, (1.0, 0.0)), Tangent(p, (0.0, 1.0))], Tangent(p, (0.0, 0.0)))
    assert v.tolist() == [0.0, 0.0]


def test_pairing_kinked_pair_selection_at_unit_height():
    p = Point(H, (0.0, 1.0))
    F = catalog_lookup("example-4.1").F
    v = pairing(F, [Tangent(p, (1.0, 1.0)), Tangent(p, (1.0, 2.0))], Tangent(p, (0.0, 1.0)))
    assert v.tolist() == [1.0, 2.0]
    # the same numbers from the catalog table at p
    g1, g2 = (f.convexificator(p).generators for f in F.components)
    assert {tuple(r) for r in g1} == {(1.0, 1.0), (-1.0, 1.0)}
    assert {tuple(r) for r in g2} == {(1.0, 2.0), (-1.0, 2.0)}


def test_pairing_dot_product():
    p = Point(E2, (7.0, -1.0))
    F = VectorFunction((SQ2.components[0],))
    assert pairing(F, [Tangent(p, (2.0, 3.0))], Tangent(p, (1.0, 1.0))).tolist() == [5.0]


def test_pairing_contracts():
    p, q = Point(E2, (0.0, 0.0)), Point(E2, (1.0, 0.0))
    F = _two_component(E2)
    with pytest.raises(ContractViolation):
        pairing(F, [Tangent(p, (1.0, 0.0)), Tangent(q, (1.0, 0.0))], Tangent(p, (1.0, 0.0)))
    with pytest.raises(ContractViolation):
        pairing(F, [Tangent(p, (1.0, 0.0))], Tangent(p, (1.0, 0.0)))


def test_vector_function_needs_one_manifold():
    with pytest.raises(ContractViolation):
        VectorFunction(())
    with pytest.raises(ContractViolation):
        VectorFunction((SQ2.components[0], SQDIST.F.components[0]))


# --- convexity ------------------------------------------------------------


def _ball(M, center, radius, n, seed=0):
    from hadamard_vvi.catalog import Region

    return sample_region_coords(Region(Point(M, center), radius), n, seed, "probes")


def test_convexity_of_square_norm_at_origin():
    rep = convexity_check(SQ2, Point(E2, (0.0, 0.0)), _ball(E2, (0.0, 0.0), 3.0, 500))
    assert rep.passed
    assert rep.worst_margin >= 0.0
    assert "no counterexample found" in rep.summary


def test_convexity_of_squared_distance_off_center():
    base = Point(H, (0.0, np.e))
    probes = sample_region_coords(SQDIST.region, 1000, 1, "probes")
    rep = convexity_check(SQDIST.F, base, probes)
    assert rep.passed
    # independent check of the same geodesic convexity: the secant inequality on segments from base
    pairs = (probes, np.broadcast_to(base.coords, probes.shape).copy())
    assert secant_check(SQDIST.F, pairs, tol=1e-6).passed


def test_convexity_fails_for_concave():
    rep = convexity_check(NEG_SQ2, Point(E2, (0.0, 0.0)), _ball(E2, (0.0, 0.0), 1.0, 100))
    assert not rep.passed
    assert rep.counterexamples
    row = rep.counterexamples[0]
    assert row["margin"] == rep.worst_margin
    assert row["margin"] == pytest.approx(-np.sum(np.array(row["probe"]) ** 2))


def test_convexity_quantifies_over_every_tuple():
    # |x| with the {-1, +1} set at 0 is convex; a set containing 2 is not a valid subgradient set
    e = catalog_lookup("euclid-abs")
    probes = np.array([[-1.0], [1.0]])
    assert convexity_check(e.F, Point(E1, (0.0,)), probes).passed
    wide = ScalarFunction(E1, lambda x: np.abs(x[:, 0]), lambda x: np.tile([[[-1.0], [2.0]]], (len(x), 1, 1)))
    rep = convexity_check(VectorFunction((wide,)), Point(E1, (0.0,)), probes)
    assert not rep.passed
    assert rep.worst_margin == pytest.approx(-1.0)
    assert rep.witness["tuple"] == [[2.0]]


def test_strict_convexity_separates_abs_from_square():
    probes = np.linspace(-2, 2, 41)[:, None]
    probes = probes[probes[:, 0] != 0.5]
    abs_rep = convexity_check(catalog_lookup("euclid-abs").F, Point(E1, (0.5,)), probes, strict=True)
    sq_rep = convexity_check(sq_norm(E1), Point(E1, (0.5,)), probes, strict=True)
    assert not abs_rep.passed and sq_rep.passed
    assert STRICT_TOL == 1e-10 and CHECK_TOL == 1e-8


# --- monotonicity -------------------------------------------------------------


def _pairs(M, n, seed=0):
    from hadamard_vvi.catalog import Region

    return sample_pairs(Region(Point(M, np.zeros(M.dim)), 2.0), n, seed, "pairs")


def test_monotonicity_of_square_norm():
    assert monotonicity_check(SQ2, _pairs(E2, 500)).passed
    assert monotonicity_check(SQ2, _pairs(E2, 500), strict=True).passed


def test_monotonicity_of_squared_distance():
    rep = monotonicity_check(SQDIST.F, sample_pairs(SQDIST.region, 1000, 2, "pairs"))
    assert rep.passed and rep.budget == 1000


def test_monotonicity_fails_for_concave():
    rep = monotonicity_check(NEG_SQ2, _pairs(E2, 100))
    assert not rep.passed and rep.counterexamples


def test_monotonicity_accepts_point_pairs():
    pairs = [(Point(E2, (0.0, 0.0)), Point(E2, (1.0, 1.0))), (Point(E2, (2.0, 0.0)), Point(E2, (-1.0, 1.0)))]
    rep = monotonicity_check(SQ2, pairs)
    # <2p - 2q, p - q> = 2 |p - q|^2
    np.testing.assert_allclose(rep.margins, [4.0, 20.0])


def test_degenerate_pairs_give_zero_margins():
    P = _pairs(E2, 20)[0]
    rep = monotonicity_check(NEG_SQ2, (P, P.copy()))
    assert np.all(rep.margins == 0.0) and rep.passed
    with pytest.raises(ContractViolation):
        monotonicity_check(SQ2, (P, P.copy()), strict=True)
    crep = convexity_check(NEG_SQ2, P, P.copy())
    assert np.all(crep.margins == 0.0)


# --- secant -------------------------------------------------------------------------


def test_secant_endpoint_equality():
    rep = secant_check(SQDIST.F, sample_pairs(SQDIST.region, 200, 3, "pairs"), mu_grid=[0.0, 1.0])
    assert rep.witness["endpoint_error"] <= 1e-10
    assert abs(rep.worst_margin) <= 1e-10


def test_secant_of_squared_distance_on_default_grid():
    rep = secant_check(SQDIST.F, sample_pairs(SQDIST.region, 1000, 4, "pairs"), tol=1e-6)
    assert rep.passed


def test_secant_violation_of_one_for_concave():
    rep = secant_check(NEG_SQ1, [(Point(E1, (-1.0,)), Point(E1, (1.0,)))], mu_grid=[0.5])
    assert not rep.passed
    assert rep.worst_margin == pytest.approx(-1.0)
    assert rep.witness["mu"] == 0.5


@pytest.mark.parametrize("bad", [[-0.1, 0.5], [0.5, 1.2], []])
def test_secant_rejects_mu_outside_unit_interval(bad):
    with pytest.raises(ContractViolation):
        secant_check(SQ2, _pairs(E2, 5), mu_grid=bad)


# --- consistency between the checks ----------------------------------------------------


@pytest.mark.parametrize("cid", CATALOG_IDS)
def test_convexity_and_monotonicity_agree(cid):
    e = catalog_lookup(cid)
    P, Q = sample_pairs(e.region, 1000, 42, "pairs")
    c = convexity_check(e.F, P, Q)
    m = monotonicity_check(e.F, (P, Q))
    assert c.passed == m.passed
    assert c.passed == (e.convexity_status in ("convex", "strictly-convex"))
    if c.passed:
        tol = 1e-6 if e.manifold == H else 1e-8
        assert secant_check(e.F, (P, Q), tol=tol).passed


@pytest.mark.parametrize("cid", CATALOG_IDS)
def test_strict_versions_agree(cid):
    e = catalog_lookup(cid)
    P, Q = sample_pairs(e.region, 1000, 42, "pairs")
    c = convexity_check(e.F, P, Q, strict=True)
    m = monotonicity_check(e.F, (P, Q), strict=True)
    assert c.passed == m.passed
    assert c.passed == (e.convexity_status == "strictly-convex")


@given(st.integers(0, 2**32 - 1))
def test_checks_are_seed_deterministic(seed):
    P, Q = sample_pairs(SQDIST.region, 30, seed, "pairs")
    P2, Q2 = sample_pairs(SQDIST.region, 30, seed, "pairs")
    a = convexity_check(SQDIST.F, P, Q)
    b = convexity_check(SQDIST.F, P2, Q2)
    assert np.array_equal(a.margins, b.margins)
