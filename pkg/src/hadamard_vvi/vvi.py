"""Sampled checks for vector variational inequalities and Pareto efficiency.

Cone membership is expressed through a signed margin: positive means the
tested vector lies outside the "bad" cone, so a check passes when the worst
margin over all samples is ``>= -tol``.

Stampacchia-type problems ask for *some* convexificator element at the
candidate, Minty-type problems constrain *every* element at each sample; the
former becomes a max over generator tuples, the latter a min.
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .convexity import VectorFunction, tuple_pairings
from .manifolds import ContractViolation, Point
from .report import CheckReport, ordered_map

__all__ = [
    "Cone",
    "ConeMembership",
    "VviKind",
    "VviVerdict",
    "EfficiencyVerdict",
    "cone_margin",
    "cone_membership",
    "stampacchia_check",
    "minty_check",
    "weak_stampacchia_check",
    "weak_minty_check",
    "vvi_check",
    "efficiency_check",
    "vvi_search",
    "relation_suite",
    "star_samples",
    "VVI_TOL",
    "ZERO_FLOOR",
]

VVI_TOL = 1e-8
ZERO_FLOOR = 1e-10
STAR_LADDER = tuple(2.0**-k for k in range(9))


class Cone(str, enum.Enum):
    NEG_PUNCTURED = "neg-orthant-minus-zero"
    POS_PUNCTURED = "pos-orthant-minus-zero"
    NEG_INTERIOR = "neg-interior"
    POS_INTERIOR = "pos-interior"


def cone_margin(v, cone: Cone, floor: float = ZERO_FLOOR):
    """Signed distance-like margin of ``v`` (last axis) from ``cone``.

    Punctured orthants exclude vectors with sup-norm at most ``floor``; those
    get margin ``+floor``.  Scalar input gives a float, batches an array.
    """
    cone = Cone(cone)
    v = np.asarray(v, float)
    sign = 1.0 if cone in (Cone.NEG_PUNCTURED, Cone.NEG_INTERIOR) else -1.0
    cols = [v[..., i] for i in range(v.shape[-1])]
    m = sign * functools.reduce(np.maximum if sign > 0 else np.minimum, cols)
    if cone in (Cone.NEG_PUNCTURED, Cone.POS_PUNCTURED):
        big = functools.reduce(np.maximum, [np.abs(c) for c in cols])
        m = np.where(big > floor, m, floor)
    return float(m) if np.ndim(m) == 0 else m


@dataclass(frozen=True)
class ConeMembership:
    cone: Cone
    margin: float

    @property
    def outside(self) -> bool:
        return self.margin > 0


def cone_membership(v, cone: Cone) -> ConeMembership:
    return ConeMembership(Cone(cone), cone_margin(v, cone))


class VviKind(str, enum.Enum):
    STAMPACCHIA = "stampacchia"
    MINTY = "minty"
    WEAK_STAMPACCHIA = "weak-stampacchia"
    WEAK_MINTY = "weak-minty"


_CONE = {
    VviKind.STAMPACCHIA: Cone.NEG_PUNCTURED,
    VviKind.MINTY: Cone.POS_PUNCTURED,
    VviKind.WEAK_STAMPACCHIA: Cone.NEG_INTERIOR,
    VviKind.WEAK_MINTY: Cone.POS_INTERIOR,
}


@dataclass
class VviVerdict:
    candidate: Point
    kind: VviKind
    worst_q: Point
    worst_margin: float
    witness_xi: Optional[list]
    budget: int
    tol: float = VVI_TOL
    margins: np.ndarray = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        return self.worst_margin >= -self.tol

    def to_dict(self):
        return {
            "candidate": self.candidate.coords.tolist(),
            "kind": self.kind.value,
            "passed": self.passed,
            "worst_q": self.worst_q.coords.tolist(),
            "worst_margin": float(self.worst_margin),
            "witness_xi": self.witness_xi,
            "budget": self.budget,
        }


@dataclass
class EfficiencyVerdict:
    candidate: Point
    weak: bool
    dominating_q: Optional[Point]
    worst_margin: float
    budget: int
    tol: float = VVI_TOL
    margins: np.ndarray = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        return self.dominating_q is None

    def to_dict(self):
        return {
            "candidate": self.candidate.coords.tolist(),
            "weak": self.weak,
            "passed": self.passed,
            "dominating_q": None if self.dominating_q is None else self.dominating_q.coords.tolist(),
            "worst_margin": float(self.worst_margin),
            "budget": self.budget,
        }


def _coords(F: VectorFunction, pts) -> np.ndarray:
    M = F.manifold
    if isinstance(pts, np.ndarray):
        return M.validate(np.atleast_2d(pts))
    return M.validate(np.array([p.coords if isinstance(p, Point) else p for p in pts], dtype=float))


def _point(F, x) -> Point:
    return x if isinstance(x, Point) else Point(F.manifold, x)


_STAMPACCHIA_SIDE = (VviKind.STAMPACCHIA, VviKind.WEAK_STAMPACCHIA)


def _pair_table(F: VectorFunction, pbar: np.ndarray, Q: np.ndarray, stampacchia_side: bool, gens_q=None):
    """Tuple pairings ``(N, T, m)`` for one side of the problem, and the generators used."""
    M = F.manifold
    if stampacchia_side:
        base = np.broadcast_to(pbar, Q.shape)
        gens = [g[0] for g in F.generators(pbar[None, :])]
        return tuple_pairings(M, base, gens, M.log(base, Q)), gens
    gens = F.generators(Q) if gens_q is None else gens_q
    return tuple_pairings(M, Q, gens, M.log(Q, np.broadcast_to(pbar, Q.shape))), gens


def _reduce_tuples(pair, kind: VviKind):
    """Stampacchia: best tuple at the candidate; Minty: worst tuple at each sample."""
    cm = cone_margin(pair, _CONE[kind])
    pick = np.argmax(cm, axis=1) if kind in _STAMPACCHIA_SIDE else np.argmin(cm, axis=1)
    return cm[np.arange(len(cm)), pick], pick


def _per_q_margins(F: VectorFunction, pbar: np.ndarray, Q: np.ndarray, kind: VviKind, gens_q=None):
    """Per-sample margins and the index of the chosen tuple, plus the tuple generators."""
    pair, gens = _pair_table(F, pbar, Q, kind in _STAMPACCHIA_SIDE, gens_q)
    margins, pick = _reduce_tuples(pair, kind)
    return margins, pick, gens


def _tuple_coords(gens, pick_t, row):
    sizes = [g.shape[-2] for g in gens]
    idx = np.unravel_index(int(pick_t), sizes)
    out = []
    for g, k in zip(gens, idx):
        out.append((g[k] if g.ndim == 2 else g[row, k]).tolist())
    return out


def vvi_check(F: VectorFunction, pbar, q_samples, kind, tol: float = VVI_TOL, gens_q=None) -> VviVerdict:
    kind = VviKind(kind)
    pb = _point(F, pbar)
    Q = _coords(F, q_samples)
    if len(Q) == 0:
        raise ContractViolation("no q samples")
    margins, pick, gens = _per_q_margins(F, pb.coords, Q, kind, gens_q)
    j = int(np.argmin(margins))
    return VviVerdict(
        candidate=pb,
        kind=kind,
        worst_q=Point(F.manifold, Q[j]),
        worst_margin=float(margins[j]),
        witness_xi=_tuple_coords(gens, pick[j], j),
        budget=len(Q),
        tol=tol,
        margins=margins,
    )


def stampacchia_check(F, pbar, q_samples, tol=VVI_TOL) -> VviVerdict:
    """Some tuple at ``pbar`` keeps ``<xi, log_pbar q>`` out of ``-R^m_+ minus {0}``, for each q."""
    return vvi_check(F, pbar, q_samples, VviKind.STAMPACCHIA, tol)


def minty_check(F, pbar, q_samples, tol=VVI_TOL) -> VviVerdict:
    """Every tuple at each ``q`` keeps ``<xi, log_q pbar>`` out of ``R^m_+ minus {0}``."""
    return vvi_check(F, pbar, q_samples, VviKind.MINTY, tol)


def weak_stampacchia_check(F, pbar, q_samples, tol=VVI_TOL) -> VviVerdict:
    return vvi_check(F, pbar, q_samples, VviKind.WEAK_STAMPACCHIA, tol)


def weak_minty_check(F, pbar, q_samples, tol=VVI_TOL) -> VviVerdict:
    return vvi_check(F, pbar, q_samples, VviKind.WEAK_MINTY, tol)


def efficiency_check(F: VectorFunction, pbar, q_samples, weak: bool = False, tol: float = VVI_TOL) -> EfficiencyVerdict:
    """Sampled dominance test: no ``q`` with ``F(q) - F(pbar)`` in the bad cone."""
    pb = _point(F, pbar)
    Q = _coords(F, q_samples)
    if len(Q) == 0:
        raise ContractViolation("no q samples")
    diff = F.values(Q) - F.values(pb.coords)
    margins = cone_margin(diff, Cone.NEG_INTERIOR if weak else Cone.NEG_PUNCTURED)
    margins = np.atleast_1d(margins)
    bad = np.flatnonzero(margins < -tol)
    return EfficiencyVerdict(
        candidate=pb,
        weak=weak,
        dominating_q=Point(F.manifold, Q[bad[0]]) if bad.size else None,
        worst_margin=float(margins.min()),
        budget=len(Q),
        tol=tol,
        margins=margins,
    )


def vvi_search(F: VectorFunction, candidates, q_samples, kind, tol: float = VVI_TOL, workers: int = 1) -> list[VviVerdict]:
    """Evaluate one check at every candidate; verdicts sorted by descending margin.

    ``kind`` may also be ``"efficiency"`` or ``"weak-efficiency"``, in which case
    the margins of :func:`efficiency_check` are used.
    """
    C = _coords(F, candidates)
    if len(C) == 0:
        raise ContractViolation("vvi_search: empty candidate grid")
    Q = _coords(F, q_samples)
    if str(kind) in ("efficiency", "weak-efficiency"):
        weak = str(kind) == "weak-efficiency"

        def one(c):
            return efficiency_check(F, c, Q, weak=weak, tol=tol)

    else:
        kind = VviKind(kind)
        gens_q = F.generators(Q) if kind in (VviKind.MINTY, VviKind.WEAK_MINTY) else None

        def one(c):
            return vvi_check(F, c, Q, kind, tol, gens_q=gens_q)

    verdicts = ordered_map(one, list(C), workers)
    order = sorted(range(len(verdicts)), key=lambda i: (-verdicts[i].worst_margin, i))
    return [verdicts[i] for i in order]


def star_samples(F: VectorFunction, pbar, q_samples, ladder: Sequence[float] = STAR_LADDER) -> np.ndarray:
    """Samples plus the geodesic points ``exp_pbar(lam log_pbar q)`` for ``lam`` in ``ladder``.

    The result is star-shaped with respect to ``pbar`` at the ladder
    resolution; it stays inside any geodesically convex region that holds
    ``pbar`` and the samples.
    """
    M = F.manifold
    pb = np.asarray(pbar.coords if isinstance(pbar, Point) else pbar, float)
    Q = _coords(F, q_samples)
    base = np.broadcast_to(pb, Q.shape)
    u = M.log(base, Q)
    parts = [Q if lam == 1.0 else M.exp(base, lam * u) for lam in ladder]
    return np.concatenate(parts, axis=0)


CONVEX_STATUSES = ("convex", "strictly-convex")

# (name, left, right, both directions?, gate)
IMPLICATIONS = (
    ("stampacchia=>weak-stampacchia", "stampacchia", "weak-stampacchia", False, "always"),
    ("minty=>weak-minty", "minty", "weak-minty", False, "always"),
    ("efficient=>weakly-efficient", "efficient", "weakly-efficient", False, "always"),
    ("stampacchia=>minty", "stampacchia", "minty", False, "convex"),
    ("stampacchia=>efficient", "stampacchia", "efficient", False, "convex"),
    ("minty<=>efficient", "minty", "efficient", True, "convex"),
    ("weak-stampacchia<=>weakly-efficient", "weak-stampacchia", "weakly-efficient", True, "convex"),
    ("weak-minty<=>weak-stampacchia", "weak-minty", "weak-stampacchia", True, "convex"),
    ("weakly-efficient=>efficient", "weakly-efficient", "efficient", False, "strict"),
)


def _candidate_row(F, c, Q, tol, star):
    S = star_samples(F, c, Q) if star else Q
    gens_s = F.generators(S)
    left, _ = _pair_table(F, c, S, True)
    right, _ = _pair_table(F, c, S, False, gens_s)
    row = {}
    for kind, pair in (
        (VviKind.STAMPACCHIA, left),
        (VviKind.WEAK_STAMPACCHIA, left),
        (VviKind.MINTY, right),
        (VviKind.WEAK_MINTY, right),
    ):
        worst = float(_reduce_tuples(pair, kind)[0].min())
        row[kind.value] = (worst >= -tol, worst)
    diff = F.values(S) - F.values(c)
    for name, cone in (("efficient", Cone.NEG_PUNCTURED), ("weakly-efficient", Cone.NEG_INTERIOR)):
        worst = float(np.min(cone_margin(diff, cone)))
        row[name] = (worst >= -tol, worst)
    return row, len(S)


def relation_suite(
    F: VectorFunction,
    candidates,
    q_samples,
    convexity_status: str,
    tol: float = VVI_TOL,
    star: bool = True,
    workers: int = 1,
) -> CheckReport:
    """Cross-tabulate the four inequality checks and efficiency at each candidate.

    Cone inclusions are asserted for every function; the convex-gated
    implications only when ``convexity_status`` is convex or strictly convex,
    and the weak-to-strong efficiency implication only when strictly convex.
    Each candidate uses one sample set for every check: the shared samples
    plus, when ``star`` is set and the convex-gated implications are
    asserted, their geodesic contractions toward the candidate (see
    :func:`star_samples`).
    """
    C = _coords(F, candidates)
    if len(C) == 0:
        raise ContractViolation("relation_suite: empty candidate grid")
    Q = _coords(F, q_samples)
    convex = convexity_status in CONVEX_STATUSES
    strict = convexity_status == "strictly-convex"
    active = {"always": True, "convex": convex, "strict": strict}

    # The contractions only matter for the convex-gated biconditionals.
    star = star and convex
    results = ordered_map(lambda c: _candidate_row(F, c, Q, tol, star), list(C), workers)

    table = {name: {"asserted": active[gate], "violations": 0} for name, *_, gate in IMPLICATIONS}
    violations = []
    margins = np.zeros(len(C))
    first_bad = [""] * len(C)
    for i, (row, _) in enumerate(results):
        for name, left, right, both, gate in IMPLICATIONS:
            if not active[gate]:
                continue
            lp, rp = row[left][0], row[right][0]
            broken = (lp and not rp) or (both and rp and not lp)
            if broken:
                table[name]["violations"] += 1
                margins[i] -= 1.0
                first_bad[i] = first_bad[i] or name
                if len(violations) < 20:
                    violations.append(
                        {
                            "candidate": C[i].tolist(),
                            "implication": name,
                            left: row[left][0],
                            right: row[right][0],
                        }
                    )
    counts = {
        k: int(sum(r[k][0] for r, _ in results))
        for k in ("stampacchia", "minty", "weak-stampacchia", "weak-minty", "efficient", "weakly-efficient")
    }
    for name, *_, gate in IMPLICATIONS:
        if not active[gate]:
            table[name]["status"] = "not applicable"
        else:
            table[name]["status"] = "violated" if table[name]["violations"] else "holds"
    return CheckReport(
        name="relations",
        passed=not violations,
        budget=len(C),
        worst_margin=float(margins.min()),
        tolerance=tol,
        witness={
            "convexity_status": convexity_status,
            "implications": table,
            "pass_counts": counts,
            "samples_per_candidate": int(results[0][1]),
        },
        counterexamples=violations,
        margins=margins,
        samples=C,
        components=np.array(first_bad, dtype=object),
    )
