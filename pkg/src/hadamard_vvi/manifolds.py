"""Closed-form geometry of the supported Hadamard manifolds.

Two manifolds are available: flat Euclidean space ``R^n`` and the Poincare
upper half-plane with metric ``g = I / y**2``.  Both are described in a single
global chart, so points and tangent vectors are plain coordinate arrays.

The manifold classes work on batches: every method accepts arrays whose last
axis holds chart coordinates and broadcasts over the leading axes.  The
:class:`Point` / :class:`Tangent` wrappers and the module-level functions
(``exp_map``, ``log_map``, ...) form the checked single-item API on top.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ContractViolation",
    "GeometryTolerance",
    "Manifold",
    "Euclidean",
    "PoincareHalfPlane",
    "Point",
    "Tangent",
    "GeodesicSplit",
    "metric_inner",
    "metric_norm",
    "exp_map",
    "log_map",
    "distance",
    "parallel_transport",
    "split_geodesic",
    "manifold_from_id",
    "split_residuals",
]


class ContractViolation(ValueError):
    """Raised when an operation is called outside its precondition."""


@dataclass(frozen=True)
class GeometryTolerance:
    absolute: float = 1e-12
    relative: float = 1e-9

    def close(self, a, b, scale=1.0) -> bool:
        err = float(np.max(np.abs(np.asarray(a, float) - np.asarray(b, float)), initial=0.0))
        return err <= self.absolute + self.relative * scale


DEFAULT_TOLERANCE = GeometryTolerance()


class Manifold:
    """Batched chart-coordinate geometry. Subclasses fill in the closed forms."""

    dim: int

    @property
    def id(self) -> str:
        raise NotImplementedError

    def validate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.dim,):
            raise ContractViolation(f"{self.id}: expected coordinates of length {self.dim}, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ContractViolation(f"{self.id}: non-finite coordinates")
        return x

    def inner(self, x, u, v):
        raise NotImplementedError

    def norm(self, x, u):
        return np.sqrt(np.maximum(self.inner(x, u, u), 0.0))

    def exp(self, x, v):
        raise NotImplementedError

    def log(self, x, y):
        raise NotImplementedError

    def dist(self, x, y):
        raise NotImplementedError

    def transport(self, x, y, u):
        """Parallel transport of ``u`` from ``x`` to ``y`` along the minimal geodesic."""
        raise NotImplementedError

    def geodesic(self, x, y, t):
        """Point ``exp_x(t log_x y)``; ``t`` broadcasts against the batch axes."""
        t = np.asarray(t, dtype=float)[..., None]
        return self.exp(x, t * self.log(x, y))

    def __repr__(self) -> str:
        return self.id


@dataclass(frozen=True, repr=False)
class Euclidean(Manifold):
    dim: int = 2

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ContractViolation("euclidean dimension must be >= 1")

    @property
    def id(self) -> str:
        return f"euclidean({self.dim})"

    def inner(self, x, u, v):
        return _dot(u, v)

    def exp(self, x, v):
        return np.asarray(x, float) + np.asarray(v, float)

    def log(self, x, y):
        return np.asarray(y, float) - np.asarray(x, float)

    def dist(self, x, y):
        return np.linalg.norm(np.asarray(y, float) - np.asarray(x, float), axis=-1)

    def transport(self, x, y, u):
        x, y, u = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float), np.asarray(u, float))
        return u.copy()


def _dot(u, v):
    """Sum of ``u * v`` over the last axis, unrolled (chart dimensions are small)."""
    u = np.asarray(u, float)
    v = np.asarray(v, float)
    out = u[..., 0] * v[..., 0]
    for i in range(1, max(u.shape[-1], v.shape[-1])):
        out = out + u[..., i] * v[..., i]
    return out


def _rot(c, s, u):
    """Rotate chart vectors ``u`` by the angle with cosine ``c`` and sine ``s``."""
    return np.stack([c * u[..., 0] - s * u[..., 1], s * u[..., 0] + c * u[..., 1]], axis=-1)


@dataclass(frozen=True, repr=False)
class PoincareHalfPlane(Manifold):
    """Upper half-plane ``{(x, y): y > 0}`` with metric ``(dx^2 + dy^2) / y^2``.

    exp/log are written in a form normalised at the base point (translate and
    scale the base to ``(0, 1)``), which has no singularity for vertical
    geodesics and keeps full precision for short ones.
    """

    dim: int = 2

    @property
    def id(self) -> str:
        return "poincare-half-plane"

    def validate(self, x) -> np.ndarray:
        x = super().validate(x)
        if not np.all(x[..., 1] > 0):
            raise ContractViolation("poincare-half-plane: second coordinate must be > 0")
        return x

    def inner(self, x, u, v):
        x = np.asarray(x, float)
        return _dot(u, v) / x[..., 1] ** 2

    def dist(self, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        chord = np.linalg.norm(y - x, axis=-1)
        # 2 asinh form of arcosh(1 + |y-x|^2 / (2 x2 y2)); exact near the diagonal
        return 2.0 * np.arcsinh(chord / (2.0 * np.sqrt(x[..., 1] * y[..., 1])))

    def exp(self, x, v):
        x = np.asarray(x, float)
        v = np.asarray(v, float)
        x, v = np.broadcast_arrays(x, v)
        y0 = x[..., 1]
        speed = np.hypot(v[..., 0], v[..., 1])
        r = speed / y0
        safe = np.where(speed > 0, speed, 1.0)
        a = np.where(speed > 0, v[..., 0] / safe, 0.0)
        b = np.where(speed > 0, v[..., 1] / safe, 0.0)
        # cosh r - b sinh r, rewritten to avoid cancellation when b -> 1
        one_minus_b = np.where(b > 0, a * a / (1.0 + np.abs(b)), 1.0 - b)
        denom = np.exp(-r) + one_minus_b * np.sinh(r)
        out = np.empty_like(x)
        out[..., 0] = x[..., 0] + y0 * a * np.sinh(r) / denom
        out[..., 1] = y0 / denom
        return out

    def log(self, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        x, y = np.broadcast_arrays(x, y)
        x1, y1 = x[..., 0], x[..., 1]
        x2, y2 = y[..., 0], y[..., 1]
        dx = x2 - x1
        r = self.dist(x, y)
        sh = np.sinh(r)
        factor = np.where(r > 1e-300, r / np.where(sh > 0, sh, 1.0), 1.0)
        out = np.empty_like(x)
        out[..., 0] = y1 * factor * dx / y2
        out[..., 1] = y1 * factor * (dx * dx + (y2 - y1) * (y2 + y1)) / (2.0 * y1 * y2)
        return out

    def transport(self, x, y, u):
        # In 2-D, transport keeps the components along the unit velocity and
        # its normal; in the conformal chart that is a rotation plus a rescale.
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        u = np.asarray(u, float)
        x, y, u = np.broadcast_arrays(x, y, u)
        start = self.log(x, y)
        end = -self.log(y, x)
        ns = np.hypot(start[..., 0], start[..., 1])
        ne = np.hypot(end[..., 0], end[..., 1])
        moving = (ns > 0) & (ne > 0)
        # normalise each direction on its own: ns * ne may underflow
        a = start / np.where(moving, ns, 1.0)[..., None]
        b = end / np.where(moving, ne, 1.0)[..., None]
        c = np.where(moving, a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1], 1.0)
        s = np.where(moving, a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0], 0.0)
        scale = (y[..., 1] / x[..., 1])[..., None]
        return scale * _rot(c, s, u)


def manifold_from_id(text: str) -> Manifold:
    if text == "poincare-half-plane":
        return PoincareHalfPlane()
    if text.startswith("euclidean(") and text.endswith(")"):
        return Euclidean(int(text[len("euclidean("):-1]))
    raise ContractViolation(f"unknown manifold id {text!r}")


class Point:
    """A manifold point stored by its chart coordinates."""

    __slots__ = ("manifold", "coords")

    def __init__(self, manifold: Manifold, coords):
        coords = manifold.validate(np.array(coords, dtype=float).reshape(-1))
        coords.setflags(write=False)
        object.__setattr__(self, "manifold", manifold)
        object.__setattr__(self, "coords", coords)

    def __setattr__(self, name, value):
        raise AttributeError("Point is immutable")

    def __eq__(self, other):
        if not isinstance(other, Point):
            return NotImplemented
        return self.manifold == other.manifold and np.array_equal(self.coords, other.coords)

    def __hash__(self):
        return hash((self.manifold, self.coords.tobytes()))

    def __repr__(self):
        return f"Point({self.manifold.id}, {self.coords.tolist()})"


class Tangent:
    """Tangent vector at ``base`` in the chart coordinate basis."""

    __slots__ = ("base", "coords")

    def __init__(self, base: Point, coords):
        coords = np.array(coords, dtype=float).reshape(-1)
        if coords.shape != base.coords.shape:
            raise ContractViolation(f"tangent of length {coords.size} at a point of dimension {base.coords.size}")
        if not np.all(np.isfinite(coords)):
            raise ContractViolation("non-finite tangent coordinates")
        coords.setflags(write=False)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "coords", coords)

    def __setattr__(self, name, value):
        raise AttributeError("Tangent is immutable")

    @property
    def manifold(self) -> Manifold:
        return self.base.manifold

    def __eq__(self, other):
        if not isinstance(other, Tangent):
            return NotImplemented
        return self.base == other.base and np.array_equal(self.coords, other.coords)

    def __hash__(self):
        return hash((self.base, self.coords.tobytes()))

    def __mul__(self, c):
        return Tangent(self.base, float(c) * self.coords)

    __rmul__ = __mul__

    def __neg__(self):
        return Tangent(self.base, -self.coords)

    def __add__(self, other):
        _same_base(self, other)
        return Tangent(self.base, self.coords + other.coords)

    def __sub__(self, other):
        _same_base(self, other)
        return Tangent(self.base, self.coords - other.coords)

    def __repr__(self):
        return f"Tangent(at={self.base.coords.tolist()}, {self.coords.tolist()})"


def _same_base(u: Tangent, v: Tangent) -> None:
    if u.base != v.base:
        raise ContractViolation(f"tangents based at different points: {u.base} vs {v.base}")


def _same_manifold(p: Point, q: Point) -> None:
    if p.manifold != q.manifold:
        raise ContractViolation(f"points on different manifolds: {p.manifold} vs {q.manifold}")


def metric_inner(u: Tangent, v: Tangent) -> float:
    _same_base(u, v)
    return float(u.manifold.inner(u.base.coords, u.coords, v.coords))


def metric_norm(u: Tangent) -> float:
    return float(u.manifold.norm(u.base.coords, u.coords))


def exp_map(p: Point, v: Tangent) -> Point:
    if v.base != p:
        raise ContractViolation("exp_map: tangent is not based at p")
    return Point(p.manifold, p.manifold.exp(p.coords, v.coords))


def log_map(p: Point, q: Point) -> Tangent:
    _same_manifold(p, q)
    return Tangent(p, p.manifold.log(p.coords, q.coords))


def distance(p: Point, q: Point) -> float:
    _same_manifold(p, q)
    return float(p.manifold.dist(p.coords, q.coords))


def parallel_transport(u: Tangent, p: Point, q: Point) -> Tangent:
    if u.base != p:
        raise ContractViolation("parallel_transport: tangent is not based at the start point")
    _same_manifold(p, q)
    return Tangent(q, p.manifold.transport(p.coords, q.coords, u.coords))


@dataclass(frozen=True)
class GeodesicSplit:
    """A point ``w`` splitting the geodesic ``p -> q`` at fraction ``s``.

    The residual properties evaluate the three splitting identities
    ``log_w p = -s P_{w<-p} log_p q``, ``log_w q = (1-s) P_{w<-p} log_p q`` and
    ``log_w p = s P_{w<-q} log_q p`` as chart-vector norms of LHS - RHS.
    """

    p: Point
    q: Point
    s: float
    w: Point

    def residuals(self) -> tuple[float, float, float]:
        M = self.p.manifold
        p, q, w = self.p.coords, self.q.coords, self.w.coords
        carried = M.transport(p, w, M.log(p, q))
        back = M.transport(q, w, M.log(q, p))
        lwp = M.log(w, p)
        lwq = M.log(w, q)
        r3 = M.norm(w, lwp + self.s * carried)
        r4 = M.norm(w, lwq - (1.0 - self.s) * carried)
        r5 = M.norm(w, lwp - self.s * back)
        return float(r3), float(r4), float(r5)


def split_geodesic(p: Point, q: Point, s: float) -> GeodesicSplit:
    _same_manifold(p, q)
    if not 0.0 < s < 1.0:
        raise ContractViolation(f"split fraction must lie in (0, 1), got {s}")
    w = Point(p.manifold, p.manifold.geodesic(p.coords, q.coords, s))
    return GeodesicSplit(p, q, float(s), w)


def split_residuals(M: Manifold, p, q, s):
    """Batched residual norms of the three splitting identities, shape (..., 3)."""
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    s = np.asarray(s, float)
    w = M.geodesic(p, q, s)
    sv = s[..., None]
    carried = M.transport(p, w, M.log(p, q))
    back = M.transport(q, w, M.log(q, p))
    lwp = M.log(w, p)
    lwq = M.log(w, q)
    return np.stack(
        [
            M.norm(w, lwp + sv * carried),
            M.norm(w, lwq - (1.0 - sv) * carried),
            M.norm(w, lwp - sv * back),
        ],
        axis=-1,
    )
