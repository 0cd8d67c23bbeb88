from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from typing import Any

import numpy as np

MAX_COUNTEREXAMPLES = 10


@dataclass
class CheckReport:
    """Outcome of a sampled property check.

    ``margins`` holds one value per sample (positive = satisfied with slack);
    ``samples`` the matching coordinates and ``components`` the index of the
    worst component for that sample.  A pass only means that no counterexample
    was found at ``budget`` samples.
    """

    name: str
    passed: bool
    budget: int
    worst_margin: float
    tolerance: float
    witness: dict[str, Any] = field(default_factory=dict)
    counterexamples: list[dict[str, Any]] = field(default_factory=list)
    margins: np.ndarray | None = field(default=None, repr=False)
    samples: np.ndarray | None = field(default=None, repr=False)
    components: np.ndarray | None = field(default=None, repr=False)
    candidate: np.ndarray | None = field(default=None, repr=False)
    notes: str = ""

    @property
    def summary(self) -> str:
        if self.passed:
            return f"{self.name}: no counterexample found at budget {self.budget} (worst margin {self.worst_margin:.3e})"
        return (
            f"{self.name}: {len(self.counterexamples)} counterexample(s) recorded at budget {self.budget} "
            f"(worst margin {self.worst_margin:.3e})"
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "budget": int(self.budget),
            "worst_margin": float(self.worst_margin),
            "tolerance": float(self.tolerance),
            "witness": _plain(self.witness),
            "counterexamples": _plain(self.counterexamples),
            "notes": self.notes,
        }


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj


def counterexample_rows(margins, threshold, make_row, limit=MAX_COUNTEREXAMPLES):
    """Rows for the worst failing samples, most negative first."""
    margins = np.asarray(margins, float)
    bad = np.flatnonzero(~(margins >= threshold))
    order = bad[np.argsort(margins[bad], kind="stable")][:limit]
    return [make_row(int(i)) for i in order]


def stream(seed: int, name: str, index: int = 0) -> np.random.Generator:
    """Independent generator keyed by ``(seed, name, index)``.

    Uses a counter-based bit generator so streams never depend on the order in
    which they are created.
    """
    key = [int(seed) & 0xFFFFFFFFFFFFFFFF, zlib.crc32(name.encode("utf-8")), int(index)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


def ordered_map(fn, items, workers: int = 1) -> list:
    """``[fn(x) for x in items]``, optionally on a thread pool; output order is input order."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
