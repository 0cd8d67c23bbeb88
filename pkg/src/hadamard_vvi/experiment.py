"""Config-driven experiment runner.

A run selects one catalog entry and a list of suites, draws every sample set
from counter-based streams keyed by the seed, and writes

* ``report.json``: the canonical report (sorted keys, floats at 17
  significant digits, no wall-clock data), byte-identical for equal configs
  regardless of the worker count;
* ``margins.csv``: one row per sample and suite for plotting;
* ``timings.json``: wall time per suite, kept out of the report so that the
  report stays reproducible.
"""

from __future__ import annotations

import csv
import json
import math
import os
import re
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from . import __version__
from .catalog import CatalogEntry, candidate_grid, catalog_lookup, sample_pairs, sample_region_coords
from .convexity import CHECK_TOL, convexity_check, monotonicity_check, secant_check
from .manifolds import Point, split_residuals
from .nonsmooth import (
    CONVEXIFICATOR_TOL,
    lower_convexificator_check,
    mvt_witness,
    sample_unit_directions,
    upper_convexificator_check,
)
from .report import ordered_map, stream
from .vvi import CONVEX_STATUSES, VVI_TOL, VviKind, efficiency_check, relation_suite, vvi_check, vvi_search

__all__ = [
    "SUITES",
    "OUTPUT_DIR_ENV",
    "Budgets",
    "ExperimentConfig",
    "ConfigError",
    "SuiteResult",
    "RunReport",
    "parse_config",
    "run",
    "canonical_json",
    "describe_suite",
]

SUITES = (
    "geometry",
    "convexificator",
    "mvt",
    "convexity",
    "monotonicity",
    "secant",
    "stampacchia",
    "minty",
    "weak-stampacchia",
    "weak-minty",
    "efficiency",
    "relations",
    "search",
)
SEARCH_KINDS = ("stampacchia", "minty", "weak-stampacchia", "weak-minty", "efficiency", "weak-efficiency")
OUTPUT_DIR_ENV = "HADAMARD_VVI_OUTPUT_DIR"

CSV_COLUMNS = ("suite", "candidate_coords", "sample_coords", "margin", "component")


class ConfigError(ValueError):
    """Invalid experiment configuration; ``field`` and ``line`` locate the problem."""

    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.field = field
        self.line = line


@dataclass(frozen=True)
class Budgets:
    """Sample counts.

    ``points`` is the number of base points for the convexificator suite and
    of geodesic segments for the mean value suite; ``directions`` the number
    of unit directions per base point; ``grid`` the mean value grid size.
    """

    q_samples: int = 10_000
    pairs: int = 1_000
    directions: int = 1_000
    grid: int = 10_000
    candidates: int = 200
    points: int = 100


@dataclass(frozen=True)
class Tolerances:
    check: float = CHECK_TOL
    vvi: float = VVI_TOL
    convexificator: float = CONVEXIFICATOR_TOL
    secant_euclidean: float = 1e-8
    secant_halfplane: float = 1e-6
    endpoint: float = 1e-10
    mvt_smooth: float = 1e-6
    mvt_kinked: float = 1e-4
    geometry: float = 1e-9
    split: float = 1e-8


@dataclass(frozen=True)
class ExperimentConfig:
    catalog_id: str
    suites: tuple[str, ...]
    seed: int
    budgets: Budgets = Budgets()
    tolerances: Tolerances = Tolerances()
    candidate: Optional[tuple[float, ...]] = None
    search_kind: str = "stampacchia"
    output_dir: str = "results"
    workers: int = 1
    defaults_applied: tuple[str, ...] = ()

    def experiment_echo(self) -> dict[str, Any]:
        """The config fields that determine results (no paths, no worker count)."""
        return {
            "catalog_id": self.catalog_id,
            "suites": list(self.suites),
            "seed": self.seed,
            "budgets": asdict(self.budgets),
            "tolerances": asdict(self.tolerances),
            "candidate": None if self.candidate is None else list(self.candidate),
            "search_kind": self.search_kind,
        }


_TOP_KEYS = ("catalog_id", "suites", "seed", "budgets", "tolerances", "candidate", "search_kind", "output_dir", "workers")


def _line_of(text: str, key: str) -> Optional[int]:
    m = re.search(r'"' + re.escape(key) + r'"\s*:', text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _is_num(x) -> bool:
    return (isinstance(x, (int, float)) and not isinstance(x, bool)) and math.isfinite(x)


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a JSON experiment configuration.

    Required keys are ``catalog_id``, ``suites`` and ``seed``.  Every default
    filled in is listed in ``defaults_applied``.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc.msg} (column {exc.colno})", line=exc.lineno) from None
    if not isinstance(doc, dict):
        raise ConfigError("the configuration must be a JSON object", line=1)

    def err(msg, key, line_key=None):
        return ConfigError(msg, field=key, line=_line_of(text, line_key or key.split(".")[-1]))

    for key in doc:
        if key not in _TOP_KEYS:
            raise err(f"unknown key (allowed: {', '.join(_TOP_KEYS)})", key)
    defaults: list[str] = []

    if "catalog_id" not in doc:
        raise ConfigError("missing required key", field="catalog_id")
    catalog_id = doc["catalog_id"]
    if not isinstance(catalog_id, str):
        raise err("must be a string", "catalog_id")
    try:
        entry = catalog_lookup(catalog_id)
    except KeyError as exc:
        raise err(exc.args[0], "catalog_id") from None

    if "suites" not in doc:
        raise ConfigError("missing required key", field="suites")
    suites = doc["suites"]
    if not isinstance(suites, list) or not suites or not all(isinstance(s, str) for s in suites):
        raise err("must be a non-empty list of suite names", "suites")
    for s in suites:
        if s not in SUITES:
            raise err(f"unknown suite {s!r} (allowed: {', '.join(SUITES)})", "suites")
    if len(set(suites)) != len(suites):
        raise err("duplicate suite names", "suites")

    if "seed" not in doc:
        raise ConfigError("missing required key (the seed is mandatory for reproducibility)", field="seed")
    seed = doc["seed"]
    if not _is_int(seed) or not 0 <= seed < 2**64:
        raise err("must be an integer in [0, 2**64)", "seed")

    budgets = _sub_record(doc, "budgets", Budgets, _is_int, "an integer >= 1", lambda v: v >= 1, defaults, err)
    if budgets.grid < 2:
        raise err("must be an integer >= 2", "budgets.grid")
    tolerances = _sub_record(doc, "tolerances", Tolerances, _is_num, "a finite number > 0", lambda v: v > 0, defaults, err)

    candidate = doc.get("candidate")
    if candidate is None:
        defaults.append("candidate")
    else:
        if not isinstance(candidate, list) or not all(_is_num(c) for c in candidate):
            raise err("must be a list of finite numbers", "candidate")
        try:
            Point(entry.manifold, candidate)
        except ValueError as exc:
            raise err(str(exc), "candidate") from None
        candidate = tuple(float(c) for c in candidate)

    search_kind = doc.get("search_kind", "stampacchia")
    if "search_kind" not in doc:
        defaults.append("search_kind")
    elif search_kind not in SEARCH_KINDS:
        raise err(f"unknown kind {search_kind!r} (allowed: {', '.join(SEARCH_KINDS)})", "search_kind")

    output_dir = doc.get("output_dir", "results")
    if "output_dir" not in doc:
        defaults.append("output_dir")
    elif not isinstance(output_dir, str) or not output_dir:
        raise err("must be a non-empty string", "output_dir")

    workers = doc.get("workers", 1)
    if "workers" not in doc:
        defaults.append("workers")
    elif not _is_int(workers) or workers < 1:
        raise err("must be an integer >= 1", "workers")

    return ExperimentConfig(
        catalog_id=catalog_id,
        suites=tuple(suites),
        seed=int(seed),
        budgets=budgets,
        tolerances=tolerances,
        candidate=candidate,
        search_kind=search_kind,
        output_dir=output_dir,
        workers=int(workers),
        defaults_applied=tuple(defaults),
    )


def _sub_record(doc, key, cls, typecheck, what, in_range, defaults, err):
    given = doc.get(key, {})
    if not isinstance(given, dict):
        raise err("must be an object", key)
    names = [f for f in cls.__dataclass_fields__]
    for k, v in given.items():
        if k not in names:
            raise err(f"unknown key (allowed: {', '.join(names)})", f"{key}.{k}")
        if not typecheck(v) or not in_range(v):
            raise err(f"must be {what}", f"{key}.{k}")
    defaults.extend(f"{key}.{n}" for n in names if n not in given)
    return cls(**given)


# --- suites -----------------------------------------------------------------


@dataclass
class SuiteResult:
    """Outcome of one suite: a JSON-ready summary plus per-sample CSV rows."""

    name: str
    passed: bool
    licensed: bool
    summary: dict[str, Any]
    rows: list[tuple] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict[str, Any]:
        return {"passed": self.passed, "licensed": self.licensed, **self.summary}


@dataclass
class RunReport:
    config: ExperimentConfig
    entry: CatalogEntry
    suites: list[SuiteResult]
    assertions: list[dict[str, Any]]
    timings: dict[str, float]
    paths: dict[str, str] = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return 1 if any(a["licensed"] and not a["holds"] for a in self.assertions) else 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "version": __version__,
            "config": self.config.experiment_echo(),
            "defaults_applied": list(self.config.defaults_applied),
            "catalog": {
                "id": self.entry.id,
                "manifold": self.entry.manifold.id,
                "convexity_status": self.entry.convexity_status,
                "region": {"center": self.entry.region.center.coords.tolist(), "radius": self.entry.region.radius},
            },
            "suites": {s.name: s.to_dict() for s in self.suites},
            "assertions": self.assertions,
            "exit_code": self.exit_code,
        }


class _Context:
    """Sample sets shared between suites, drawn lazily from named streams."""

    def __init__(self, config: ExperimentConfig, entry: CatalogEntry):
        self.config = config
        self.entry = entry
        self.F = entry.F
        self.M = entry.manifold
        self.b = config.budgets
        self.tol = config.tolerances
        self._cache: dict[str, Any] = {}

    def _get(self, key, make):
        if key not in self._cache:
            self._cache[key] = make()
        return self._cache[key]

    @property
    def pairs(self):
        return self._get("pairs", lambda: sample_pairs(self.entry.region, self.b.pairs, self.config.seed, "pairs"))

    @property
    def q_samples(self):
        return self._get(
            "q", lambda: sample_region_coords(self.entry.region, self.b.q_samples, self.config.seed, "q-samples")
        )

    @property
    def points(self):
        return self._get("points", lambda: sample_region_coords(self.entry.region, self.b.points, self.config.seed, "points"))

    @property
    def segments(self):
        return self._get("segments", lambda: sample_pairs(self.entry.region, self.b.points, self.config.seed, "segments"))

    @property
    def candidates(self):
        return self._get("candidates", lambda: candidate_grid(self.entry.region, self.b.candidates))

    @property
    def candidate(self) -> np.ndarray:
        c = self.config.candidate
        return self.entry.region.center.coords if c is None else np.asarray(c, float)

    @property
    def convex(self) -> bool:
        return self.entry.convexity_status in CONVEX_STATUSES


def _coords_text(x) -> str:
    return " ".join(_fmt(float(v)) for v in np.atleast_1d(x))


def _rows(suite, candidate, samples, margins, components):
    cand = "" if candidate is None else _coords_text(candidate)
    comps = np.zeros(len(margins), dtype=int) if components is None else components
    return [
        (suite, cand, _coords_text(s), float(m), c if isinstance(c, str) else int(c))
        for s, m, c in zip(samples, margins, comps)
    ]


def _suite_geometry(ctx: _Context) -> SuiteResult:
    M, tol = ctx.M, ctx.tol
    P, Q = ctx.pairs
    rng = stream(ctx.config.seed, "geometry")
    d = M.dist(P, Q)
    L = M.log(P, Q)
    roundtrip = M.dist(M.exp(P, L), Q) / (1.0 + d)
    agreement = np.abs(M.norm(P, L) - d)
    u = sample_unit_directions(M, P, len(P), rng)
    v = sample_unit_directions(M, P, len(P), rng)
    drift = np.abs(M.inner(Q, M.transport(P, Q, u), M.transport(P, Q, v)) - M.inner(P, u, v))
    s = rng.uniform(0.0, 1.0, len(P))
    split = split_residuals(M, P, Q, s)
    slack = np.stack(
        [tol.geometry - roundtrip, tol.geometry - agreement, tol.geometry - drift]
        + [tol.split - split[:, k] for k in range(3)],
        axis=1,
    )
    comp = np.argmin(slack, axis=1)
    margins = slack[np.arange(len(P)), comp]
    names = ("roundtrip", "distance-vs-log", "transport-drift", "split-from-p", "split-from-q", "split-reverse")
    worst = {
        "roundtrip": float(roundtrip.max()),
        "distance-vs-log": float(agreement.max()),
        "transport-drift": float(drift.max()),
        "split-from-p": float(split[:, 0].max()),
        "split-from-q": float(split[:, 1].max()),
        "split-reverse": float(split[:, 2].max()),
    }
    passed = bool(margins.min() >= 0.0)
    j = int(np.argmin(margins))
    return SuiteResult(
        "geometry",
        passed,
        True,
        {
            "budget": len(P),
            "worst_margin": float(margins[j]),
            "worst_errors": worst,
            "witness": {"p": P[j].tolist(), "q": Q[j].tolist(), "identity": names[comp[j]]},
        },
        _rows("geometry", None, np.concatenate([P, Q], axis=1), margins, comp),
    )


def _suite_convexificator(ctx: _Context) -> SuiteResult:
    M, F = ctx.M, ctx.F
    X = ctx.points

    def one(i):
        p = Point(M, X[i])
        dirs = sample_unit_directions(M, X[i], ctx.b.directions, stream(ctx.config.seed, "directions", i))
        best = (np.inf, 0, "")
        for c, f in enumerate(F.components):
            cvx = f.convexificator(p)
            for check in (upper_convexificator_check, lower_convexificator_check):
                rep = check(f, p, cvx, dirs, tol=ctx.tol.convexificator)
                if rep.worst_margin < best[0]:
                    best = (rep.worst_margin, c, rep.name)
        return best

    results = ordered_map(one, range(len(X)), ctx.config.workers)
    margins = np.array([r[0] for r in results])
    comp = np.array([r[1] for r in results])
    j = int(np.argmin(margins))
    passed = bool(margins.min() >= -ctx.tol.convexificator)
    return SuiteResult(
        "convexificator",
        passed,
        True,
        {
            "budget": len(X),
            "directions_per_point": ctx.b.directions,
            "worst_margin": float(margins[j]),
            "tolerance": ctx.tol.convexificator,
            "witness": {"point": X[j].tolist(), "component": int(comp[j]), "check": results[j][2]},
            "failing_points": int(np.sum(margins < -ctx.tol.convexificator)),
        },
        _rows("convexificator", None, X, margins, comp),
    )


def _suite_mvt(ctx: _Context) -> SuiteResult:
    M, F = ctx.M, ctx.F
    P, Q = ctx.segments
    tol = ctx.tol.mvt_kinked if ctx.entry.kinked else ctx.tol.mvt_smooth

    def one(i):
        if np.array_equal(P[i], Q[i]):
            return 0.0, 0, 0.0
        worst = (-1.0, 0, 0.0)
        for c, f in enumerate(F.components):
            w = mvt_witness(f, Point(M, P[i]), Point(M, Q[i]), grid_size=ctx.b.grid)
            if w.residual > worst[0]:
                worst = (w.residual, c, w.t_star)
        return worst

    results = ordered_map(one, range(len(P)), ctx.config.workers)
    residual = np.array([r[0] for r in results])
    comp = np.array([r[1] for r in results])
    margins = tol - residual
    j = int(np.argmax(residual))
    return SuiteResult(
        "mvt",
        bool(residual.max() < tol),
        True,
        {
            "budget": len(P),
            "grid": ctx.b.grid,
            "worst_residual": float(residual[j]),
            "worst_margin": float(margins[j]),
            "tolerance": tol,
            "witness": {"p": P[j].tolist(), "q": Q[j].tolist(), "component": int(comp[j]), "t_star": results[j][2]},
        },
        _rows("mvt", None, np.concatenate([P, Q], axis=1), margins, comp),
    )


def _from_check(name, rep, licensed, candidate=None, extra=None) -> SuiteResult:
    summary = rep.to_dict()
    summary.pop("name")
    summary.pop("passed")
    summary.update(extra or {})
    return SuiteResult(name, rep.passed, licensed, summary, _rows(name, candidate, rep.samples, rep.margins, rep.components))


def _suite_convexity(ctx: _Context) -> SuiteResult:
    P, Q = ctx.pairs
    return _from_check("convexity", convexity_check(ctx.F, P, Q, tol=ctx.tol.check), ctx.convex)


def _suite_monotonicity(ctx: _Context) -> SuiteResult:
    return _from_check("monotonicity", monotonicity_check(ctx.F, ctx.pairs, tol=ctx.tol.check), ctx.convex)


def _suite_secant(ctx: _Context) -> SuiteResult:
    tol = ctx.tol.secant_halfplane if ctx.M.id == "poincare-half-plane" else ctx.tol.secant_euclidean
    rep = secant_check(ctx.F, ctx.pairs, tol=tol, endpoint_tol=ctx.tol.endpoint)
    return _from_check("secant", rep, ctx.convex)


def _vvi_suite(kind: str):
    def suite(ctx: _Context) -> SuiteResult:
        Q = ctx.q_samples
        v = vvi_check(ctx.F, ctx.candidate, Q, VviKind(kind), tol=ctx.tol.vvi)
        summary = v.to_dict()
        summary.pop("passed")
        summary["tolerance"] = ctx.tol.vvi
        summary["violations"] = int(np.sum(v.margins < -ctx.tol.vvi))
        return SuiteResult(kind, v.passed, False, summary, _rows(kind, ctx.candidate, Q, v.margins, None))

    return suite


def _suite_efficiency(ctx: _Context) -> SuiteResult:
    Q = ctx.q_samples
    strong = efficiency_check(ctx.F, ctx.candidate, Q, weak=False, tol=ctx.tol.vvi)
    weak = efficiency_check(ctx.F, ctx.candidate, Q, weak=True, tol=ctx.tol.vvi)
    summary = strong.to_dict()
    summary.pop("passed")
    summary["weak"] = weak.to_dict()
    summary["tolerance"] = ctx.tol.vvi
    return SuiteResult("efficiency", strong.passed, False, summary, _rows("efficiency", ctx.candidate, Q, strong.margins, None))


def _suite_relations(ctx: _Context) -> SuiteResult:
    C = ctx.candidates
    rep = relation_suite(
        ctx.F, C, ctx.q_samples, ctx.entry.convexity_status, tol=ctx.tol.vvi, workers=ctx.config.workers
    )
    summary = rep.to_dict()
    for k in ("name", "passed"):
        summary.pop(k)
    rows = [("relations", _coords_text(c), "", float(m), str(b)) for c, m, b in zip(C, rep.margins, rep.components)]
    return SuiteResult("relations", rep.passed, True, summary, rows)


def _suite_search(ctx: _Context) -> SuiteResult:
    C = ctx.candidates
    kind = ctx.config.search_kind
    verdicts = vvi_search(ctx.F, C, ctx.q_samples, kind, tol=ctx.tol.vvi, workers=ctx.config.workers)
    passing = [v for v in verdicts if v.passed]
    summary = {
        "kind": kind,
        "budget": len(C),
        "q_samples": len(ctx.q_samples),
        "passing_count": len(passing),
        "passing": [v.candidate.coords.tolist() for v in passing],
        "top": [v.to_dict() for v in verdicts[:10]],
        "worst_margin": float(verdicts[-1].worst_margin),
    }
    rows = [("search", _coords_text(v.candidate.coords), "", float(v.worst_margin), 0) for v in verdicts]
    return SuiteResult("search", bool(passing), False, summary, rows)


_RUNNERS: dict[str, Callable[[_Context], SuiteResult]] = {
    "geometry": _suite_geometry,
    "convexificator": _suite_convexificator,
    "mvt": _suite_mvt,
    "convexity": _suite_convexity,
    "monotonicity": _suite_monotonicity,
    "secant": _suite_secant,
    "stampacchia": _vvi_suite("stampacchia"),
    "minty": _vvi_suite("minty"),
    "weak-stampacchia": _vvi_suite("weak-stampacchia"),
    "weak-minty": _vvi_suite("weak-minty"),
    "efficiency": _suite_efficiency,
    "relations": _suite_relations,
    "search": _suite_search,
}

_DESCRIPTIONS = {
    "geometry": "exp/log roundtrip, distance vs |log|, transport isometry and the three geodesic splitting "
    "identities on `pairs` sampled pairs; always licensed",
    "convexificator": "upper and lower convexificator checks against Dini estimates at `points` sampled points, "
    "`directions` unit directions each; always licensed",
    "mvt": "mean value witness search on `points` sampled geodesic segments with `grid` nodes; residual below the "
    "smooth or kinked tolerance; always licensed",
    "convexity": "subgradient convexity inequality for every generator tuple on `pairs` (base, probe) pairs; "
    "licensed when the entry is convex",
    "monotonicity": "monotonicity of the convexificator map on `pairs` pairs; licensed when the entry is convex",
    "secant": "secant inequality on a 21-point mu grid over `pairs` pairs; licensed when the entry is convex",
    "stampacchia": "Stampacchia inequality at the candidate over `q_samples` samples (max over tuples); diagnostic",
    "minty": "Minty inequality at the candidate over `q_samples` samples (min over tuples); diagnostic",
    "weak-stampacchia": "weak Stampacchia inequality at the candidate over `q_samples` samples; diagnostic",
    "weak-minty": "weak Minty inequality at the candidate over `q_samples` samples; diagnostic",
    "efficiency": "sampled dominance test (strong and weak) at the candidate over `q_samples` samples; diagnostic",
    "relations": "cross-tabulation of the inequality checks and efficiency at `candidates` grid points; asserts "
    "cone inclusions always and the convexity-gated implications when licensed",
    "search": "runs `search_kind` at every one of `candidates` grid points, sorted by margin; diagnostic",
}


def describe_suite(name: str) -> str:
    if name not in _DESCRIPTIONS:
        raise KeyError(f"unknown suite {name!r}; available: {', '.join(SUITES)}")
    return f"{name}: {_DESCRIPTIONS[name]}"


def _assertions(ctx: _Context, results: dict[str, SuiteResult]) -> list[dict[str, Any]]:
    out = []
    for r in results.values():
        out.append({"name": f"{r.name} passes", "licensed": r.licensed, "holds": r.passed})
    if "convexity" in results and "monotonicity" in results:
        agree = results["convexity"].passed == results["monotonicity"].passed
        out.append({"name": "convexity agrees with monotonicity", "licensed": True, "holds": agree})
    if "convexity" in results and "secant" in results:
        ok = results["secant"].passed or not results["convexity"].passed
        out.append({"name": "convexity implies secant", "licensed": True, "holds": ok})
    return out


def resolve_output_dir(config: ExperimentConfig, override: Optional[str] = None) -> Path:
    """Precedence: explicit override, then the environment variable, then the config."""
    return Path(override or os.environ.get(OUTPUT_DIR_ENV) or config.output_dir)


def run(config: ExperimentConfig, output_dir: Optional[str] = None, write: bool = True) -> RunReport:
    """Run the configured suites in the order given and optionally write the outputs."""
    entry = catalog_lookup(config.catalog_id)
    ctx = _Context(config, entry)
    results: dict[str, SuiteResult] = {}
    timings: dict[str, float] = {}
    for name in config.suites:
        start = time.perf_counter()
        results[name] = _RUNNERS[name](ctx)
        timings[name] = time.perf_counter() - start
    report = RunReport(config, entry, list(results.values()), _assertions(ctx, results), timings)
    if write:
        _write(report, resolve_output_dir(config, output_dir))
    return report


def _write(report: RunReport, out: Path) -> None:
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = {"report": out / "report.json", "margins": out / "margins.csv", "timings": out / "timings.json"}
        paths["report"].write_text(canonical_json(report.to_dict()), encoding="utf-8")
        with open(paths["margins"], "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for s in report.suites:
                for suite, cand, sample, margin, comp in s.rows:
                    w.writerow((suite, cand, sample, _fmt(margin), comp))
        timing_doc = {"wall_seconds": report.timings, "workers": report.config.workers}
        paths["timings"].write_text(canonical_json(timing_doc), encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write results to {out}: {exc.strerror or exc}") from exc
    report.paths = {k: str(v) for k, v in paths.items()}


# --- canonical serialization --------------------------------------------------


def _fmt(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    if x == 0.0:
        return "0.0"
    text = format(x, ".17g")
    if not any(ch in text for ch in ".en"):
        text += ".0"
    return text


def canonical_json(obj) -> str:
    """JSON with sorted keys, two-space indent and floats at 17 significant digits.

    Non-finite floats become the strings ``"NaN"``, ``"Infinity"`` and
    ``"-Infinity"`` so the output stays strict JSON.
    """
    return _emit(obj, 0) + "\n"


def _emit(obj, level: int) -> str:
    pad = "  " * (level + 1)
    end = "  " * level
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = sorted((str(k), v) for k, v in obj.items())
        body = ",\n".join(f"{pad}{json.dumps(k)}: {_emit(v, level + 1)}" for k, v in items)
        return "{\n" + body + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(_emit(v, level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _emit(v, level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, np.ndarray):
        return _emit(obj.tolist(), level)
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return _fmt(x) if math.isfinite(x) else json.dumps(_fmt(x))
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    raise TypeError(f"cannot serialize {type(obj).__name__}")
