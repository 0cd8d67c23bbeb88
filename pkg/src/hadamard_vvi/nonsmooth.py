"""Dini derivatives, convexificators and a constructive mean value theorem.

A convexificator is stored as a finite list of generators; the set it stands
for is their convex hull.  Because ``xi -> <xi, v>`` is linear, every sup/inf
over the hull is a max/min over the generators.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .manifolds import ContractViolation, Manifold, Point, Tangent
from .report import CheckReport, counterexample_rows

__all__ = [
    "ScalarFunction",
    "Convexificator",
    "DiniSchedule",
    "DiniEstimate",
    "DiniProbeError",
    "MvtWitness",
    "dini_estimate",
    "dini_quotients",
    "upper_convexificator_check",
    "lower_convexificator_check",
    "mvt_witness",
    "sample_unit_directions",
]

CONVEXIFICATOR_TOL = 1e-4


class DiniProbeError(ArithmeticError):
    """The function evaluator returned a non-finite value at a probe point."""

    def __init__(self, t: float, point):
        super().__init__(f"non-finite function value at probe step t={t!r} (point {np.asarray(point).tolist()})")
        self.t = t


@dataclass(frozen=True)
class ScalarFunction:
    """A real function with a convexificator oracle, both batched.

    ``value`` maps coordinates of shape ``(N, d)`` to ``(N,)``.
    ``generators`` maps ``(N, d)`` to ``(N, k, d)`` tangent generators; points
    with fewer than ``k`` distinct generators repeat one of them, which leaves
    the hull unchanged.
    """

    manifold: Manifold
    value: Callable[[np.ndarray], np.ndarray]
    generators: Callable[[np.ndarray], np.ndarray]
    name: str = "f"
    lipschitz_hint: Optional[float] = None

    def __call__(self, p: Point) -> float:
        return float(self.value(p.coords[None, :])[0])

    def convexificator(self, p: Point) -> "Convexificator":
        gens = np.asarray(self.generators(p.coords[None, :])[0], float)
        # drop the padding duplicates, keep first-seen order
        _, idx = np.unique(gens, axis=0, return_index=True)
        return Convexificator(p, gens[np.sort(idx)])


@dataclass(frozen=True)
class Convexificator:
    base: Point
    generators: np.ndarray

    def __post_init__(self):
        gens = np.array(self.generators, dtype=float)
        if gens.ndim == 1:
            gens = gens[None, :]
        if gens.shape[0] == 0:
            raise ContractViolation("a convexificator needs at least one generator")
        if gens.shape[1] != self.base.coords.size:
            raise ContractViolation("generator dimension does not match the base point")
        gens.setflags(write=False)
        object.__setattr__(self, "generators", gens)

    @classmethod
    def from_tangents(cls, tangents: list[Tangent]) -> "Convexificator":
        if not tangents:
            raise ContractViolation("a convexificator needs at least one generator")
        base = tangents[0].base
        for t in tangents:
            if t.base != base:
                raise ContractViolation("convexificator generators must share their base point")
        return cls(base, np.stack([t.coords for t in tangents]))

    @property
    def tangents(self) -> list[Tangent]:
        return [Tangent(self.base, g) for g in self.generators]

    def support(self, v: Tangent) -> tuple[float, float]:
        """(min, max) of ``<xi, v>`` over the hull."""
        if v.base != self.base:
            raise ContractViolation("direction is not based at the convexificator base")
        vals = self.base.manifold.inner(self.base.coords, self.generators, v.coords)
        return float(vals.min()), float(vals.max())


@dataclass(frozen=True)
class DiniSchedule:
    t0: float = 1e-2
    sigma: float = 0.5
    steps: int = 20
    tail: int = 6

    def __post_init__(self):
        if not (0.0 < self.sigma < 1.0) or self.t0 <= 0 or self.steps < 1 or not (1 <= self.tail <= self.steps):
            raise ContractViolation(f"invalid Dini schedule {self}")
        if self.t0 * self.sigma**self.steps < 1e-10:
            raise ContractViolation("Dini schedule reaches below the 1e-10 step floor")

    def tail_steps(self) -> np.ndarray:
        k = np.arange(self.steps - self.tail, self.steps)
        return self.t0 * self.sigma**k


@dataclass(frozen=True)
class DiniEstimate:
    lower: float
    upper: float
    steps_used: int
    schedule: DiniSchedule


def dini_quotients(f: ScalarFunction, x, v, schedule: DiniSchedule = DiniSchedule()) -> np.ndarray:
    """Difference quotients over the schedule tail, shape ``(N, tail)``."""
    M = f.manifold
    x = np.atleast_2d(np.asarray(x, float))
    v = np.atleast_2d(np.asarray(v, float))
    x, v = np.broadcast_arrays(x, v)
    ts = schedule.tail_steps()
    f0 = f.value(x)
    if not np.all(np.isfinite(f0)):
        raise DiniProbeError(0.0, x[~np.isfinite(f0)][0])
    out = np.empty((x.shape[0], ts.size))
    for j, t in enumerate(ts):
        probe = M.exp(x, t * v)
        ft = f.value(probe)
        bad = ~np.isfinite(ft)
        if bad.any():
            raise DiniProbeError(float(t), probe[bad][0])
        out[:, j] = (ft - f0) / t
    return out


def dini_estimate(f: ScalarFunction, p: Point, v: Tangent, schedule: DiniSchedule = DiniSchedule()) -> DiniEstimate:
    """Lower/upper Dini derivative of ``f`` at ``p`` along ``v``.

    liminf/limsup are approximated by min/max of the geodesic difference
    quotients over the last ``schedule.tail`` steps ``t0 * sigma**k``.
    """
    if v.base != p:
        raise ContractViolation("dini_estimate: direction is not based at p")
    q = dini_quotients(f, p.coords, v.coords, schedule)[0]
    return DiniEstimate(float(q.min()), float(q.max()), schedule.steps, schedule)


def sample_unit_directions(M: Manifold, x, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` metric-unit directions at ``x`` (one point or ``n`` points): chart Gaussians rescaled by the metric norm."""
    x = np.asarray(x, float)
    g = rng.standard_normal((n, M.dim))
    return g / M.norm(x, g)[:, None]


def _convexificator_check(kind, f, p, cvx, directions, schedule, tol) -> CheckReport:
    if cvx.base != p:
        raise ContractViolation("convexificator is not based at p")
    dirs = np.array([d.coords for d in directions]) if not isinstance(directions, np.ndarray) else directions
    dirs = np.atleast_2d(dirs)
    M = f.manifold
    q = dini_quotients(f, p.coords, dirs, schedule)
    pair = M.inner(p.coords, cvx.generators[None, :, :], dirs[:, None, :])
    if kind == "upper":
        margins = pair.max(axis=1) - q.min(axis=1)
    else:
        margins = q.max(axis=1) - pair.min(axis=1)
    worst = int(np.argmin(margins))
    rows = counterexample_rows(
        margins, -tol, lambda i: {"direction": dirs[i].tolist(), "margin": float(margins[i])}
    )
    return CheckReport(
        name=f"{kind}-convexificator",
        passed=bool(margins.min() >= -tol),
        budget=len(dirs),
        worst_margin=float(margins[worst]),
        tolerance=tol,
        witness={"point": p.coords.tolist(), "direction": dirs[worst].tolist()},
        counterexamples=rows,
        margins=margins,
        samples=dirs,
        components=np.zeros(len(dirs), dtype=int),
        candidate=p.coords,
    )


def upper_convexificator_check(f, p, cvx, directions, schedule=DiniSchedule(), tol=CONVEXIFICATOR_TOL) -> CheckReport:
    """Sampled check of ``f^-(p; v) <= max_xi <xi, v>`` over ``directions``."""
    return _convexificator_check("upper", f, p, cvx, directions, schedule, tol)


def lower_convexificator_check(f, p, cvx, directions, schedule=DiniSchedule(), tol=CONVEXIFICATOR_TOL) -> CheckReport:
    """Sampled check of ``f^+(p; v) >= min_xi <xi, v>`` over ``directions``."""
    return _convexificator_check("lower", f, p, cvx, directions, schedule, tol)


@dataclass(frozen=True)
class MvtWitness:
    """A mean-value witness on the geodesic from ``p`` to ``q``.

    ``xi`` is ``sum(coefficients[i] * generators[i])`` at ``w``.  When the
    search had to close a bracket down to floating-point resolution
    (``limit=True``), the generators come from the two ends of that bracket,
    transported to ``w``, i.e. the limiting form of the witness.
    """

    t_star: float
    w: Point
    xi: Tangent
    residual: float
    coefficients: np.ndarray = field(repr=False)
    generators: np.ndarray = field(repr=False)
    limit: bool = False


class _Segment:
    """Pairing intervals of the union convexificator along a fixed geodesic."""

    def __init__(self, f: ScalarFunction, p: Point, q: Point):
        self.f = f
        self.M = f.manifold
        self.p = p.coords
        self.q = q.coords
        self.direction = self.M.log(self.p, self.q)
        self.delta = float(f.value(np.stack([self.q]))[0] - f.value(np.stack([self.p]))[0])

    def at(self, t):
        t = np.asarray(t, float)
        w = self.M.geodesic(self.p[None, :], self.q[None, :], t)
        w[t == 0.0] = self.p
        w[t == 1.0] = self.q
        carried = self.M.transport(self.p[None, :], w, self.direction[None, :])
        gens = np.asarray(self.f.generators(w), float)
        pair = self.M.inner(w[:, None, :], gens, carried[:, None, :])
        return w, gens, pair

    def signed_gap(self, pair):
        """>0 when delta lies below the interval, <0 above, 0 inside."""
        lo, hi = pair.min(axis=1), pair.max(axis=1)
        return np.where(self.delta < lo, lo - self.delta, np.where(self.delta > hi, hi - self.delta, 0.0))


def _combine(delta, g_lo, v_lo, g_hi, v_hi):
    if v_hi == v_lo:
        theta = 1.0
    else:
        theta = float(np.clip((v_hi - delta) / (v_hi - v_lo), 0.0, 1.0))
    return theta, theta * g_lo + (1.0 - theta) * g_hi


def _witness_at(seg: _Segment, t, w, gens, pair, residual) -> MvtWitness:
    lo, hi = int(np.argmin(pair)), int(np.argmax(pair))
    theta, xi = _combine(seg.delta, gens[lo], pair[lo], gens[hi], pair[hi])
    wp = Point(seg.M, w)
    return MvtWitness(
        t_star=float(t),
        w=wp,
        xi=Tangent(wp, xi),
        residual=float(residual),
        coefficients=np.array([theta, 1.0 - theta]),
        generators=np.stack([gens[lo], gens[hi]]),
    )


def mvt_witness(f: ScalarFunction, p: Point, q: Point, grid_size: int = 4096, max_bisections: int = 200) -> MvtWitness:
    """Search the geodesic ``[p, q]`` for a mean-value witness.

    The interior nodes ``t = k / grid_size`` are scanned for the first point
    where ``f(q) - f(p)`` lies inside ``[min, max]`` of the pairings
    ``<xi, P_{w<-p} log_p q>`` over the convexificator at ``w``.  Failing an
    exact hit, the first sign change of the gap (endpoints included) is
    bisected; a bracket that closes to adjacent floats yields the limiting
    witness.  Without any sign change the best node is refined by a 10x local
    zoom and its gap is reported as the residual.
    """
    if p.manifold != q.manifold:
        raise ContractViolation("mvt_witness: points on different manifolds")
    if p == q:
        raise ContractViolation("mvt_witness: p and q must differ")
    n = int(grid_size)
    if n < 2:
        raise ContractViolation("mvt_witness: empty grid (grid_size must be >= 2)")
    seg = _Segment(f, p, q)
    ts = np.arange(0, n + 1) / n
    w, gens, pair = seg.at(ts)
    gap = seg.signed_gap(pair)
    if not np.all(np.isfinite(gap)):
        raise ContractViolation("mvt_witness: function not finite along the geodesic")

    inside = np.flatnonzero(gap[1:-1] == 0.0)
    if inside.size:
        k = inside[0] + 1
        return _witness_at(seg, ts[k], w[k], gens[k], pair[k], 0.0)

    sign = np.sign(gap)
    change = np.flatnonzero(sign[:-1] * sign[1:] < 0)
    if change.size:
        k = int(change[0])
        a, b = ts[k], ts[k + 1]
        sa = sign[k]
        for _ in range(max_bisections):
            m = 0.5 * (a + b)
            if not (a < m < b):
                break
            wm, gm, pm = seg.at(np.array([m]))
            gm_gap = seg.signed_gap(pm)[0]
            if gm_gap == 0.0:
                return _witness_at(seg, m, wm[0], gm[0], pm[0], 0.0)
            if np.sign(gm_gap) == sa:
                a = m
            else:
                b = m
        return _limit_witness(seg, a, b)

    k = int(np.argmin(np.abs(gap[1:-1]))) + 1
    h = 1.0 / n
    local = np.clip(ts[k] + np.linspace(-h, h, 21), h / 10.0, 1.0 - h / 10.0)
    local = np.unique(np.concatenate([local, ts[k : k + 1]]))
    wl, gl, pl = seg.at(local)
    gl_gap = np.abs(seg.signed_gap(pl))
    j = int(np.argmin(gl_gap))
    return _witness_at(seg, local[j], wl[j], gl[j], pl[j], gl_gap[j])


def _limit_witness(seg: _Segment, a: float, b: float) -> MvtWitness:
    """Witness from a bracket ``[a, b]`` that can no longer be split.

    One end has its pairing interval above the target and the other below, so
    a convex combination of generators from the two ends hits it exactly.
    """
    ends = np.array([a, b])
    w, gens, pair = seg.at(ends)
    # anchor at an interior end, bring the other end's generators there; the
    # two points coincide to rounding and the pairing values are the ones
    # that bracketed the target
    i, j = (0, 1) if a > 0.0 else (1, 0)
    moved = seg.M.transport(w[j][None, :], w[i][None, :], gens[j])
    all_g = np.concatenate([gens[i], moved])
    all_v = np.concatenate([pair[i], pair[j]])
    lo, hi = int(np.argmin(all_v)), int(np.argmax(all_v))
    residual = 0.0
    if seg.delta < all_v[lo]:
        residual = all_v[lo] - seg.delta
    elif seg.delta > all_v[hi]:
        residual = seg.delta - all_v[hi]
    theta, xi = _combine(seg.delta, all_g[lo], all_v[lo], all_g[hi], all_v[hi])
    wp = Point(seg.M, w[i])
    return MvtWitness(
        t_star=float(ends[i]),
        w=wp,
        xi=Tangent(wp, xi),
        residual=float(residual),
        coefficients=np.array([theta, 1.0 - theta]),
        generators=np.stack([all_g[lo], all_g[hi]]),
        limit=True,
    )
