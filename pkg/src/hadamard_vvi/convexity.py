"""Convexity, monotonicity and secant checks for vector functions.

All checks quantify over every element of the convexificators.  The margins
are affine in each generator, so it is enough to visit the generators, and
since component ``i`` of a margin only involves the ``i``-th element of a
tuple, the worst tuple is assembled componentwise.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .manifolds import ContractViolation, Manifold, Point, Tangent
from .nonsmooth import ScalarFunction
from .report import CheckReport, counterexample_rows

__all__ = [
    "VectorFunction",
    "pairing",
    "convexity_check",
    "monotonicity_check",
    "secant_check",
    "CHECK_TOL",
    "STRICT_TOL",
]

CHECK_TOL = 1e-8
STRICT_TOL = 1e-10


@dataclass(frozen=True)
class VectorFunction:
    components: tuple[ScalarFunction, ...]
    name: str = "F"

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ContractViolation("a vector function needs at least one component")
        M = comps[0].manifold
        if any(c.manifold != M for c in comps):
            raise ContractViolation("all components must live on the same manifold")
        object.__setattr__(self, "components", comps)

    @property
    def manifold(self) -> Manifold:
        return self.components[0].manifold

    @property
    def m(self) -> int:
        return len(self.components)

    def values(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, float))
        return np.stack([c.value(x) for c in self.components], axis=-1)

    def generators(self, x) -> list[np.ndarray]:
        """Per component, generator arrays of shape ``(N, k_i, d)``."""
        x = np.atleast_2d(np.asarray(x, float))
        return [np.asarray(c.generators(x), float) for c in self.components]

    def __call__(self, p: Point) -> np.ndarray:
        return self.values(p.coords)[0]


def pairing(F: VectorFunction, selection: Sequence[Tangent], u: Tangent) -> np.ndarray:
    """Vector ``(<xi_1, u>, ..., <xi_m, u>)`` at the common base point."""
    if len(selection) != F.m:
        raise ContractViolation(f"expected {F.m} tangents, got {len(selection)}")
    for xi in selection:
        if xi.base != u.base:
            raise ContractViolation("pairing: all tangents must share one base point")
    M = u.base.manifold
    return np.array([float(M.inner(u.base.coords, xi.coords, u.coords)) for xi in selection])


def tuple_pairings(M: Manifold, x, gens: list[np.ndarray], u) -> np.ndarray:
    """Pairings for every generator tuple, shape ``(N, T, m)``.

    ``gens[i]`` has shape ``(N, k_i, d)`` (or ``(k_i, d)`` when shared by all
    samples); ``u`` has shape ``(N, d)``.
    """
    u = np.atleast_2d(np.asarray(u, float))
    x = np.asarray(x, float)
    per = []
    for g in gens:
        if g.ndim == 2:
            g = np.broadcast_to(g, (u.shape[0],) + g.shape)
        xx = x[:, None, :] if x.ndim == 2 else x
        per.append(M.inner(xx, g, u[:, None, :]))  # (N, k_i)
    index = list(itertools.product(*[range(p.shape[1]) for p in per]))
    out = np.empty((u.shape[0], len(index), len(per)))
    for t, combo in enumerate(index):
        for i, k in enumerate(combo):
            out[:, t, i] = per[i][:, k]
    return out


def _as_coords(M: Manifold, pts) -> np.ndarray:
    if isinstance(pts, Point):
        return pts.coords[None, :]
    if isinstance(pts, np.ndarray):
        return M.validate(np.atleast_2d(pts))
    return M.validate(np.array([p.coords if isinstance(p, Point) else p for p in pts], dtype=float))


def _pairs(M: Manifold, pairs):
    if isinstance(pairs, tuple) and len(pairs) == 2 and isinstance(pairs[0], np.ndarray):
        P, Q = pairs
    else:
        pairs = list(pairs)
        P = [a for a, _ in pairs]
        Q = [b for _, b in pairs]
    return _as_coords(M, P), _as_coords(M, Q)


def convexity_check(F: VectorFunction, base, probes, strict: bool = False, tol: float = CHECK_TOL) -> CheckReport:
    """Subgradient-style convexity inequality at ``base`` over ``probes``.

    For every probe ``p`` and every generator tuple ``xi`` at the base, the
    margin vector is ``F(p) - F(base) - <xi, log_base p>``.  ``base`` is one
    point, or an ``(N, d)`` array pairing a base with each probe.
    """
    M = F.manifold
    X = _as_coords(M, probes)
    B = _as_coords(M, base)
    B = np.broadcast_to(B, X.shape)
    u = M.log(B, X)
    diff = F.values(X) - F.values(B)
    gens = F.generators(B)
    worst = np.empty_like(diff)
    pick = np.empty(diff.shape, dtype=int)
    for i, g in enumerate(gens):
        pair = M.inner(B[:, None, :], g, u[:, None, :])  # (N, k)
        pick[:, i] = np.argmax(pair, axis=1)
        worst[:, i] = diff[:, i] - pair.max(axis=1)
    comp = np.argmin(worst, axis=1)
    margins = worst[np.arange(len(X)), comp]
    if strict:
        moving = np.any(X != B, axis=1)
        ok = np.where(moving, margins > STRICT_TOL, margins >= -tol)
        threshold = STRICT_TOL
    else:
        ok = margins >= -tol
        threshold = -tol
    j = int(np.argmin(margins))

    def row(i):
        return {
            "base": B[i].tolist(),
            "probe": X[i].tolist(),
            "component": int(comp[i]),
            "tuple": [gens[c][i, pick[i, c]].tolist() for c in range(F.m)],
            "margin": float(margins[i]),
        }

    return CheckReport(
        name="strict-convexity" if strict else "convexity",
        passed=bool(ok.all()),
        budget=len(X),
        worst_margin=float(margins[j]),
        tolerance=tol,
        witness=row(j),
        counterexamples=[row(i) for i in np.flatnonzero(~ok)[np.argsort(margins[~ok], kind="stable")][:10]],
        margins=margins,
        samples=X,
        components=comp,
        candidate=B[0] if len(B) else None,
    )


def monotonicity_check(F: VectorFunction, pairs, strict: bool = False, tol: float = CHECK_TOL) -> CheckReport:
    """Monotonicity of the convexificator map over sampled pairs ``(p, q)``.

    Component ``i`` of the tested vector is ``<P_{q<-p} xi_i - zeta_i, log_q p>``
    with ``xi`` at ``p`` and ``zeta`` at ``q``; every generator combination is
    visited.
    """
    M = F.manifold
    P, Q = _pairs(M, pairs)
    moving = np.any(P != Q, axis=1)
    if strict and not moving.all():
        raise ContractViolation("strict monotonicity needs p != q for every pair")
    u = M.log(Q, P)
    gp = F.generators(P)
    gq = F.generators(Q)
    worst = np.empty((len(P), F.m))
    for i in range(F.m):
        moved = M.transport(P[:, None, :], Q[:, None, :], gp[i])
        a = M.inner(Q[:, None, :], moved, u[:, None, :])
        b = M.inner(Q[:, None, :], gq[i], u[:, None, :])
        worst[:, i] = a.min(axis=1) - b.max(axis=1)
    worst[~moving] = 0.0
    comp = np.argmin(worst, axis=1)
    margins = worst[np.arange(len(P)), comp]
    ok = margins > STRICT_TOL if strict else margins >= -tol
    j = int(np.argmin(margins))

    def row(i):
        return {"p": P[i].tolist(), "q": Q[i].tolist(), "component": int(comp[i]), "margin": float(margins[i])}

    return CheckReport(
        name="strict-monotonicity" if strict else "monotonicity",
        passed=bool(ok.all()),
        budget=len(P),
        worst_margin=float(margins[j]),
        tolerance=tol,
        witness=row(j),
        counterexamples=[row(i) for i in np.flatnonzero(~ok)[np.argsort(margins[~ok], kind="stable")][:10]],
        margins=margins,
        samples=np.concatenate([P, Q], axis=1),
        components=comp,
    )


def secant_check(
    F: VectorFunction,
    pairs,
    mu_grid=None,
    tol: float = CHECK_TOL,
    endpoint_tol: float = 1e-10,
) -> CheckReport:
    """``F(exp_q(mu log_q p)) <= F(q) + mu (F(p) - F(q))`` componentwise.

    The endpoints ``mu = 0`` and ``mu = 1`` must hold with equality to
    ``endpoint_tol``.
    """
    M = F.manifold
    P, Q = _pairs(M, pairs)
    mus = np.linspace(0.0, 1.0, 21) if mu_grid is None else np.asarray(mu_grid, float)
    if mus.size == 0 or mus.min() < 0.0 or mus.max() > 1.0:
        raise ContractViolation("mu values must lie in [0, 1]")
    FP = F.values(P)
    FQ = F.values(Q)
    log_qp = M.log(Q, P)
    worst = np.full(len(P), np.inf)
    comp = np.zeros(len(P), dtype=int)
    at_mu = np.zeros(len(P))
    endpoint_err = 0.0
    for mu in mus:
        z = Q if mu == 0.0 else M.exp(Q, mu * log_qp)
        slack = FQ + mu * (FP - FQ) - F.values(z)
        if mu == 0.0 or mu == 1.0:
            endpoint_err = max(endpoint_err, float(np.abs(slack).max(initial=0.0)))
        c = np.argmin(slack, axis=1)
        s = slack[np.arange(len(P)), c]
        better = s < worst
        worst = np.where(better, s, worst)
        comp = np.where(better, c, comp)
        at_mu = np.where(better, mu, at_mu)
    ok = worst >= -tol
    j = int(np.argmin(worst))

    def row(i):
        return {
            "p": P[i].tolist(),
            "q": Q[i].tolist(),
            "mu": float(at_mu[i]),
            "component": int(comp[i]),
            "margin": float(worst[i]),
        }

    endpoints_ok = endpoint_err <= endpoint_tol
    return CheckReport(
        name="secant",
        passed=bool(ok.all() and endpoints_ok),
        budget=len(P),
        worst_margin=float(worst[j]),
        tolerance=tol,
        witness={**row(j), "endpoint_error": endpoint_err, "endpoint_tol": endpoint_tol},
        counterexamples=counterexample_rows(worst, -tol, row),
        margins=worst,
        samples=np.concatenate([P, Q], axis=1),
        components=comp,
    )
