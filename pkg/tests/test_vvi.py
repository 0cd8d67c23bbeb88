import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hadamard_vvi.catalog import candidate_grid, catalog_lookup, sample_region_coords
from hadamard_vvi.convexity import VectorFunction
from hadamard_vvi.manifolds import ContractViolation, Euclidean, PoincareHalfPlane, Point
from hadamard_vvi.nonsmooth import ScalarFunction
from hadamard_vvi.vvi import (
    ZERO_FLOOR,
    Cone,
    cone_margin,
    cone_membership,
    efficiency_check,
    minty_check,
    relation_suite,
    stampacchia_check,
    star_samples,
    vvi_check,
    vvi_search,
    weak_minty_check,
    weak_stampacchia_check,
)

from oracles import dominated_mask

H = PoincareHalfPlane()
E1 = Euclidean(1)
E2 = Euclidean(2)
EX = catalog_lookup("example-4.1")


def linear(M, *coefs):
    """Components x -> <c, x> with constant gradient c."""
    comps = []
    for c in coefs:
        c = np.asarray(c, float)
        comps.append(ScalarFunction(M, lambda x, c=c: x @ c, lambda x, c=c: np.tile(c, (len(x), 1, 1))))
    return VectorFunction(tuple(comps))


def coordinate_squares():
    comps = []
    for i in range(2):
        comps.append(
            ScalarFunction(
                E2,
                lambda x, i=i: x[:, i] ** 2,
                lambda x, i=i: (2.0 * x * np.eye(2)[i])[:, None, :],
            )
        )
    return VectorFunction(tuple(comps))


SQUARES = coordinate_squares()
DIAG = linear(E2, (1.0, 0.0), (1.0, 0.0))
OPPOSITE = linear(E1, (1.0,), (-1.0,))
PARETO = catalog_lookup("euclid-pareto-1d")


def ball(M, center, radius, n, seed=0):
    from hadamard_vvi.catalog import Region

    return sample_region_coords(Region(Point(M, center), radius), n, seed, "q")


# --- cone margins -------------------------------------------------------------


def test_zero_vector_is_outside_punctured_cone():
    m = cone_membership((0.0, 0.0), Cone.NEG_PUNCTURED)
    assert m.outside and m.margin == ZERO_FLOOR


def test_negative_vector_inside_punctured_cone():
    assert cone_margin((-1.0, -2.0), Cone.NEG_PUNCTURED) == -1.0


def test_boundary_vector_not_in_interior():
    m = cone_membership((-1.0, 0.0), Cone.NEG_INTERIOR)
    assert m.margin == 0.0
    assert not m.outside  # on the boundary: a pass only thanks to the tolerance


@pytest.mark.parametrize(
    "v, cone, expected",
    [
        ((1.0, 2.0), Cone.POS_PUNCTURED, -1.0),
        ((1.0, -2.0), Cone.POS_PUNCTURED, 2.0),
        ((0.0, 0.0), Cone.POS_PUNCTURED, ZERO_FLOOR),
        ((0.0, 0.0), Cone.POS_INTERIOR, 0.0),
        ((3.0, 0.5), Cone.POS_INTERIOR, -0.5),
        ((-3.0, 0.5), Cone.NEG_INTERIOR, 0.5),
    ],
)
def test_cone_margin_table(v, cone, expected):
    assert cone_margin(v, cone) == expected


def test_cone_margin_batched():
    v = np.array([[[-1.0, -2.0], [0.0, 0.0]], [[1.0, -1.0], [5.0, 4.0]]])
    np.testing.assert_array_equal(cone_margin(v, Cone.NEG_PUNCTURED), [[-1.0, ZERO_FLOOR], [1.0, 5.0]])


@given(
    st.lists(st.floats(-100, 100), min_size=1, max_size=4),
    st.floats(1e-3, 1e3),
    st.sampled_from([Cone.NEG_INTERIOR, Cone.POS_INTERIOR]),
)
def test_cone_margin_positively_homogeneous(v, c, cone):
    v = np.array(v)
    assert cone_margin(c * v, cone) == pytest.approx(c * cone_margin(v, cone), rel=1e-15, abs=0.0)


@given(st.lists(st.floats(-100, 100), min_size=1, max_size=4), st.floats(1e-3, 1e3))
def test_punctured_margin_homogeneous_away_from_zero(v, c):
    v = np.array(v)
    if np.max(np.abs(v)) > ZERO_FLOOR and np.max(np.abs(c * v)) > ZERO_FLOOR:
        assert cone_margin(c * v, Cone.NEG_PUNCTURED) == pytest.approx(
            c * cone_margin(v, Cone.NEG_PUNCTURED), rel=1e-15, abs=0.0
        )


# --- Stampacchia / Minty ----------------------------------------------------------


def test_stampacchia_coordinate_squares_at_origin():
    v = stampacchia_check(SQUARES, Point(E2, (0.0, 0.0)), ball(E2, (0.0, 0.0), 2.0, 500))
    assert v.passed and v.worst_margin == ZERO_FLOOR


def test_stampacchia_linear_fails():
    v = stampacchia_check(DIAG, Point(E2, (0.0, 0.0)), [Point(E2, (-1.0, 0.0))])
    assert not v.passed
    assert v.worst_margin == -1.0
    assert v.witness_xi == [[1.0, 0.0], [1.0, 0.0]]


def test_stampacchia_picks_best_tuple_at_the_kink():
    # at (0, 1) a horizontal move is answered by the matching sign of the first table column
    p = Point(H, (0.0, 1.0))
    Q = np.array([[1.0, 1.0], [-1.0, 1.0]])
    v = stampacchia_check(EX.F, p, Q)
    assert v.passed and np.all(v.margins > 0)


def test_stampacchia_vertical_drop_from_unit_height():
    # below (0, 1) on the axis the log direction is (0, -c): every tuple pairs to (-c, -2c)
    p = Point(H, (0.0, 1.0))
    q = Point(H, (0.0, np.exp(-1.0)))
    v = stampacchia_check(EX.F, p, [q])
    assert v.worst_margin == pytest.approx(-1.0, rel=1e-14)
    assert not v.passed
    up = stampacchia_check(EX.F, p, [Point(H, (0.0, np.e))])
    assert up.passed


def test_minty_coordinate_squares():
    Q = ball(E2, (0.0, 0.0), 2.0, 500)
    v = minty_check(SQUARES, Point(E2, (0.0, 0.0)), Q)
    assert v.passed
    # brute force: the pairing at q against log_q 0 = -q is -2 q * q <= 0 componentwise
    pair = -2.0 * Q * Q
    assert np.all(pair <= 0)


def test_minty_linear_fails():
    # at q=(-1,0) the reverse direction log_q 0 is (1,0): pairing (1,1) lies in the positive orthant
    v = minty_check(DIAG, Point(E2, (0.0, 0.0)), [Point(E2, (-1.0, 0.0))])
    assert not v.passed and v.worst_margin == -1.0
    # at q=(1,0) the reverse direction is (-1,0) and the pairing (-1,-1) is harmless
    assert minty_check(DIAG, Point(E2, (0.0, 0.0)), [Point(E2, (1.0, 0.0))]).passed


def test_minty_sample_at_candidate_contributes_zero_pairing():
    p = Point(E2, (0.3, -0.2))
    v = minty_check(DIAG, p, [p])
    assert v.passed and v.worst_margin == ZERO_FLOOR


def test_weak_stampacchia_examples():
    Q = ball(E2, (0.0, 0.0), 2.0, 300)
    p0 = Point(E2, (0.0, 0.0))
    strong = stampacchia_check(SQUARES, p0, Q)
    assert strong.passed and weak_stampacchia_check(SQUARES, p0, Q).passed
    for x in (-2.0, 0.0, 1.5):
        assert weak_stampacchia_check(OPPOSITE, Point(E1, (x,)), ball(E1, (0.0,), 3.0, 100)).passed
    assert not weak_stampacchia_check(DIAG, p0, [Point(E2, (-1.0, 0.0))]).passed


def test_weak_minty_examples():
    p0 = Point(E2, (0.0, 0.0))
    assert weak_minty_check(SQUARES, p0, ball(E2, (0.0, 0.0), 2.0, 300)).passed
    for x in (-2.0, 0.0, 1.5):
        assert weak_minty_check(OPPOSITE, Point(E1, (x,)), ball(E1, (0.0,), 3.0, 100)).passed
    assert not weak_minty_check(DIAG, p0, [Point(E2, (-1.0, 0.0))]).passed


def test_strong_pass_implies_weak_pass_on_same_samples():
    Q = sample_region_coords(EX.region, 2000, 5, "q")
    for c in candidate_grid(EX.region, 30):
        if stampacchia_check(EX.F, c, Q).passed:
            assert weak_stampacchia_check(EX.F, c, Q).passed
        if minty_check(EX.F, c, Q).passed:
            assert weak_minty_check(EX.F, c, Q).passed


def test_vvi_check_needs_samples():
    with pytest.raises(ContractViolation):
        vvi_check(SQUARES, Point(E2, (0.0, 0.0)), np.zeros((0, 2)), "minty")


def test_verdict_serialises():
    v = minty_check(SQUARES, Point(E2, (0.0, 0.0)), ball(E2, (0.0, 0.0), 1.0, 10))
    d = v.to_dict()
    assert d["kind"] == "minty" and d["passed"] is True and d["budget"] == 10


# --- efficiency ----------------------------------------------------------------------


def test_global_minimiser_is_efficient():
    assert efficiency_check(SQUARES, Point(E2, (0.0, 0.0)), ball(E2, (0.0, 0.0), 2.0, 500)).passed


def test_trade_off_everywhere_is_efficient():
    Q = ball(E1, (0.0,), 3.0, 200)
    for x in (-1.0, 0.0, 2.0):
        assert efficiency_check(OPPOSITE, Point(E1, (x,)), Q).passed
        assert efficiency_check(OPPOSITE, Point(E1, (x,)), Q, weak=True).passed


def test_dominated_point_reports_first_dominator():
    v = efficiency_check(PARETO.F, Point(E1, (5.0,)), [Point(E1, (6.0,)), Point(E1, (2.0,))])
    assert not v.passed
    assert v.dominating_q == Point(E1, (2.0,))
    # F(2) - F(5) = (4 - 25, 0 - 9)
    assert v.worst_margin == -9.0


def test_efficiency_margins_strong_and_weak():
    F = linear(E2, (1.0, 0.0), (0.0, 1.0))
    p = Point(E2, (0.0, 0.0))
    # strict dominance in every component fails both notions
    for weak in (False, True):
        v = efficiency_check(F, p, [Point(E2, (-1.0, -2.0))], weak=weak)
        assert not v.passed and v.worst_margin == -1.0
    # a tie in one component sits on the cone boundary: margin zero, accepted within tolerance
    assert efficiency_check(F, p, [Point(E2, (0.0, -1.0))]).worst_margin == 0.0
    # the candidate itself never dominates; only the punctured cone lifts it off zero
    assert efficiency_check(F, p, [p]).worst_margin == ZERO_FLOOR
    assert efficiency_check(F, p, [p], weak=True).worst_margin == 0.0


# --- search -----------------------------------------------------------------------


def test_search_coordinate_squares_origin_best():
    grid = np.stack(np.meshgrid(np.linspace(-1, 1, 5), np.linspace(-1, 1, 5)), axis=-1).reshape(-1, 2)
    out = vvi_search(SQUARES, grid, ball(E2, (0.0, 0.0), 2.0, 500), "stampacchia")
    assert out[0].candidate == Point(E2, (0.0, 0.0))
    margins = [v.worst_margin for v in out]
    assert margins == sorted(margins, reverse=True)


def test_search_pareto_segment():
    grid = np.linspace(-1.0, 3.0, 81)[:, None]
    Q = np.concatenate([ball(E1, (1.0,), 2.0, 2000), grid])
    passing = sorted(float(v.candidate.coords[0]) for v in vvi_search(PARETO.F, grid, Q, "stampacchia") if v.passed)
    assert passing[0] == pytest.approx(0.0, abs=1e-12) and passing[-1] == pytest.approx(2.0, abs=1e-12)
    # brute-force dominance agrees with the inequality search on the same samples
    values = PARETO.F.values(grid)
    efficient = ~dominated_mask(values, PARETO.F.values(Q))
    assert sorted(grid[efficient, 0].tolist()) == passing


def test_search_rejects_empty_grid():
    with pytest.raises(ContractViolation):
        vvi_search(SQUARES, np.zeros((0, 2)), ball(E2, (0.0, 0.0), 1.0, 5), "minty")


def test_search_efficiency_kind_and_worker_independence():
    grid = candidate_grid(EX.region, 40)
    Q = sample_region_coords(EX.region, 1000, 3, "q")
    a = vvi_search(EX.F, grid, Q, "weak-efficiency", workers=1)
    b = vvi_search(EX.F, grid, Q, "weak-efficiency", workers=4)
    assert [v.candidate for v in a] == [v.candidate for v in b]
    assert [v.worst_margin for v in a] == [v.worst_margin for v in b]


def test_kinked_pair_center_on_chart_grid():
    # 20 x 20 chart grid around (0, 1); the center is a node
    xs = np.linspace(-1.0, 1.0, 21)[:20]
    ys = np.linspace(0.1, 1.9, 19)
    ys = np.sort(np.concatenate([ys, [1.0]]))
    grid = np.stack(np.meshgrid(xs, ys), axis=-1).reshape(-1, 2)
    assert np.any(np.all(grid == [0.0, 1.0], axis=1))
    Q = sample_region_coords(EX.region, 2000, 42, "q")
    out = vvi_search(EX.F, grid, Q, "stampacchia")
    center = [v for v in out if v.candidate == Point(H, (0.0, 1.0))][0]
    # samples below the center on (or near) the axis pair into the negative orthant
    assert not center.passed
    assert center.worst_q.coords[1] < 1.0


# --- relations ------------------------------------------------------------------------


def test_relations_on_squared_distance():
    e = catalog_lookup("sqdist-halfplane")
    rep = relation_suite(e.F, candidate_grid(e.region, 50), sample_region_coords(e.region, 2000, 1, "q"), "convex")
    assert rep.passed and rep.worst_margin == 0.0
    table = rep.witness["implications"]
    assert all(table[k]["status"] == "holds" for k in table if k != "weakly-efficient=>efficient")
    assert table["weakly-efficient=>efficient"]["status"] == "not applicable"


def test_relations_gate_on_nonconvex():
    F = VectorFunction(
        (ScalarFunction(E2, lambda x: -np.sum(x * x, axis=-1), lambda x: (-2.0 * x)[:, None, :]),), "neg"
    )
    grid = np.stack(np.meshgrid(np.linspace(-1, 1, 5), np.linspace(-1, 1, 5)), axis=-1).reshape(-1, 2)
    rep = relation_suite(F, grid, ball(E2, (0.0, 0.0), 1.5, 500), "nonconvex")
    table = rep.witness["implications"]
    for name in ("stampacchia=>minty", "minty<=>efficient", "weak-minty<=>weak-stampacchia"):
        assert table[name]["status"] == "not applicable" and not table[name]["asserted"]
    assert table["stampacchia=>weak-stampacchia"]["status"] == "holds"
    assert rep.passed


def test_relations_cone_inclusion_at_kinked_center():
    rep = relation_suite(EX.F, [Point(H, (0.0, 1.0))], sample_region_coords(EX.region, 3000, 2, "q"), "nonconvex")
    assert rep.witness["implications"]["stampacchia=>weak-stampacchia"]["violations"] == 0
    assert rep.passed


def test_relations_flags_an_inconsistent_convexity_claim():
    # a concave function declared convex breaks the convex-gated implications
    F = VectorFunction(
        (ScalarFunction(E1, lambda x: -(x[:, 0] ** 2), lambda x: (-2.0 * x)[:, None, :]),), "concave"
    )
    grid = np.linspace(-1, 1, 11)[:, None]
    rep = relation_suite(F, grid, np.linspace(-2, 2, 101)[:, None], "convex")
    assert not rep.passed
    assert rep.counterexamples and rep.worst_margin < 0


def test_star_samples_stay_in_region():
    e = catalog_lookup("sqdist-halfplane")
    Q = sample_region_coords(e.region, 100, 0, "q")
    c = candidate_grid(e.region, 10)[3]
    S = star_samples(e.F, c, Q)
    assert S.shape == (900, 2)
    assert np.all(e.region.contains(S))
    np.testing.assert_array_equal(S[:100], Q)
