"""Convex objective components, projectors, and argmin-set calculus.

All evaluators broadcast: points may be a single vector of length ``m`` or
any batch shaped ``(..., m)``.  Projections return the input unchanged (bit
for bit) on points already inside the set, so gradients vanish exactly on
minimizers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class UnsupportedRepresentationError(ValueError):
    """The requested set has no exact representation in this library."""


def _vector(v, name="vector"):
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} must be finite")
    return arr


def _check_dim(x, dim):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != dim:
        raise ValueError(f"point has dimension {x.shape[-1]}, expected {dim}")
    return x


class ConvexSet:
    """Closed convex set with an exact Euclidean projector."""

    dim: int

    def project(self, x):
        raise NotImplementedError

    def distance(self, x):
        x = _check_dim(x, self.dim)
        return np.linalg.norm(x - self.project(x), axis=-1)

    def contains(self, x, tol=0.0):
        return self.distance(x) <= tol

    def interior_margin(self, x):
        """Radius of the largest ball around ``x`` inside the set (<= 0 outside)."""
        raise NotImplementedError

    def is_bounded(self) -> bool:
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError


class Point(ConvexSet):
    """Singleton set {c}."""

    def __init__(self, c):
        self.c = _vector(c, "point")
        self.c.flags.writeable = False
        self.dim = self.c.shape[0]

    def project(self, x):
        x = _check_dim(x, self.dim)
        return np.broadcast_to(self.c, x.shape).copy()

    def distance(self, x):
        x = _check_dim(x, self.dim)
        return np.linalg.norm(x - self.c, axis=-1)

    def interior_margin(self, x):
        return -self.distance(x)

    def is_bounded(self):
        return True

    def describe(self):
        return {"kind": "point", "at": self.c.tolist()}

    def __repr__(self):
        return f"Point({self.c.tolist()})"


class Ball(ConvexSet):
    """Closed Euclidean ball; radius zero degenerates to a point."""

    def __init__(self, center, radius):
        self.center = _vector(center, "center")
        self.center.flags.writeable = False
        self.radius = float(radius)
        if not np.isfinite(self.radius) or self.radius < 0.0:
            raise ValueError("radius must be a finite nonnegative real")
        self.dim = self.center.shape[0]

    def project(self, x):
        x = _check_dim(x, self.dim)
        d = x - self.center
        r = np.linalg.norm(d, axis=-1, keepdims=True)
        inside = r <= self.radius
        safe = np.where(r > 0.0, r, 1.0)
        shrunk = self.center + d * (self.radius / safe)
        return np.where(inside, x, shrunk)

    def distance(self, x):
        x = _check_dim(x, self.dim)
        r = np.linalg.norm(x - self.center, axis=-1)
        return np.maximum(r - self.radius, 0.0)

    def interior_margin(self, x):
        x = _check_dim(x, self.dim)
        return self.radius - np.linalg.norm(x - self.center, axis=-1)

    def is_bounded(self):
        return True

    def describe(self):
        return {"kind": "ball", "center": self.center.tolist(), "radius": self.radius}

    def __repr__(self):
        return f"Ball(center={self.center.tolist()}, radius={self.radius})"


class Box(ConvexSet):
    """Axis-aligned box; bounds may be infinite componentwise."""

    def __init__(self, lower, upper):
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        if self.lower.ndim != 1 or self.lower.shape != self.upper.shape:
            raise ValueError("lower and upper must be vectors of equal length")
        if np.any(np.isnan(self.lower)) or np.any(np.isnan(self.upper)):
            raise ValueError("box bounds must not be NaN")
        if np.any(self.lower > self.upper):
            raise ValueError("box needs lower <= upper componentwise")
        self.lower.flags.writeable = False
        self.upper.flags.writeable = False
        self.dim = self.lower.shape[0]

    def project(self, x):
        x = _check_dim(x, self.dim)
        return np.clip(x, self.lower, self.upper)

    def interior_margin(self, x):
        x = _check_dim(x, self.dim)
        lo = x - self.lower
        hi = self.upper - x
        return np.minimum(lo, hi).min(axis=-1)

    def is_bounded(self):
        return bool(np.isfinite(self.lower).all() and np.isfinite(self.upper).all())

    def describe(self):
        return {"kind": "box", "lower": self.lower.tolist(), "upper": self.upper.tolist()}

    def __repr__(self):
        return f"Box({self.lower.tolist()}, {self.upper.tolist()})"


class ConvexComponent:
    """Differentiable convex function on R^m with an exact gradient."""

    dim: int

    def value(self, x):
        raise NotImplementedError

    def grad(self, x):
        raise NotImplementedError

    def argmin_set(self) -> ConvexSet:
        raise NotImplementedError

    def gradient_lipschitz(self) -> float:
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError


class Quadratic(ConvexComponent):
    """f(x) = 0.5 (x - c)^T Q (x - c) with symmetric PSD Q."""

    def __init__(self, matrix, center):
        q = np.asarray(matrix, dtype=float)
        c = _vector(center, "center")
        if q.ndim != 2 or q.shape[0] != q.shape[1] or q.shape[0] != c.shape[0]:
            raise ValueError("matrix must be square and match the center dimension")
        if not np.allclose(q, q.T, atol=1e-10, rtol=0.0):
            raise ValueError("matrix must be symmetric")
        q = 0.5 * (q + q.T)
        eigs = np.linalg.eigvalsh(q)
        if eigs[0] < -1e-10:
            raise ValueError(f"matrix must be positive semidefinite, found eigenvalue {eigs[0]}")
        self.matrix = q
        self.matrix.flags.writeable = False
        self.center = c
        self.center.flags.writeable = False
        self.dim = c.shape[0]
        self._eig_min = float(eigs[0])
        self._eig_max = float(eigs[-1])

    @property
    def is_positive_definite(self) -> bool:
        return self._eig_min > 1e-10

    def value(self, x):
        e = _check_dim(x, self.dim) - self.center
        return 0.5 * np.einsum("...i,ij,...j->...", e, self.matrix, e)

    def grad(self, x):
        e = _check_dim(x, self.dim) - self.center
        return e @ self.matrix

    def argmin_set(self):
        if not self.is_positive_definite:
            raise UnsupportedRepresentationError(
                "argmin of a singular quadratic is an affine subspace, "
                "which this library does not represent"
            )
        return Point(self.center)

    def gradient_lipschitz(self):
        return self._eig_max

    def describe(self):
        return {
            "kind": "quadratic",
            "matrix": self.matrix.tolist(),
            "center": self.center.tolist(),
        }


class SquaredDistance(ConvexComponent):
    """f(x) = 0.5 dist(x, S)^2; gradient is x - P_S(x)."""

    def __init__(self, target: ConvexSet):
        if not isinstance(target, ConvexSet):
            raise TypeError("target must be a ConvexSet")
        self.target = target
        self.dim = target.dim

    def value(self, x):
        return 0.5 * self.target.distance(x) ** 2

    def grad(self, x):
        x = _check_dim(x, self.dim)
        return x - self.target.project(x)

    def argmin_set(self):
        return self.target

    def gradient_lipschitz(self):
        return 1.0

    def describe(self):
        return {"kind": "sqdist", "set": self.target.describe()}


class Sum(ConvexComponent):
    """Pointwise sum of convex components."""

    def __init__(self, parts):
        parts = tuple(parts)
        if not parts:
            raise ValueError("sum needs at least one part")
        dims = {p.dim for p in parts}
        if len(dims) != 1:
            raise ValueError("all parts must share one dimension")
        self.parts = parts
        self.dim = parts[0].dim

    def value(self, x):
        return sum(p.value(x) for p in self.parts)

    def grad(self, x):
        out = self.parts[0].grad(x)
        for p in self.parts[1:]:
            out = out + p.grad(x)
        return out

    def argmin_set(self):
        raise UnsupportedRepresentationError(
            "argmin of a sum has no exact representation in this library"
        )

    def gradient_lipschitz(self):
        return sum(p.gradient_lipschitz() for p in self.parts)

    def describe(self):
        return {"kind": "sum", "parts": [p.describe() for p in self.parts]}


class ObjectiveSet:
    """One convex component per node, all on a common R^m.

    Stacked evaluators take states shaped ``(..., n_nodes, m)``.  Homogeneous
    collections (all quadratics, or all squared distances to balls) are
    evaluated in one vectorized pass; anything else falls back to a per-node
    loop.
    """

    def __init__(self, components):
        comps = tuple(components)
        if not comps:
            raise ValueError("at least one component is required")
        for c in comps:
            if not isinstance(c, ConvexComponent):
                raise TypeError("components must be ConvexComponent instances")
        dims = {c.dim for c in comps}
        if len(dims) != 1:
            raise ValueError("all components must share one dimension")
        self.components = comps
        self.m = comps[0].dim
        self.n_nodes = len(comps)

        self._mode = "generic"
        if all(isinstance(c, Quadratic) for c in comps):
            self._mode = "quadratic"
            self._mats = np.stack([c.matrix for c in comps])
            self._centers = np.stack([c.center for c in comps])
        elif all(
            isinstance(c, SquaredDistance) and isinstance(c.target, Ball) for c in comps
        ):
            self._mode = "ball"
            self._centers = np.stack([c.target.center for c in comps])
            self._radii = np.array([c.target.radius for c in comps])

    def _check_stack(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-2:] != (self.n_nodes, self.m):
            raise ValueError(
                f"stacked state must end with shape ({self.n_nodes}, {self.m}), got {x.shape}"
            )
        return x

    def stacked_grad(self, x):
        """Per-node gradients: ``out[..., i, :] = grad f_i(x[..., i, :])``."""
        x = self._check_stack(x)
        if self._mode == "quadratic":
            e = x - self._centers
            return np.einsum("nij,...nj->...ni", self._mats, e)
        if self._mode == "ball":
            d = x - self._centers
            r = np.linalg.norm(d, axis=-1, keepdims=True)
            inside = r <= self._radii[:, None]
            safe = np.where(r > 0.0, r, 1.0)
            proj = self._centers + d * (self._radii[:, None] / safe)
            return x - np.where(inside, x, proj)
        out = np.empty_like(x)
        for i, c in enumerate(self.components):
            out[..., i, :] = c.grad(x[..., i, :])
        return out

    def stacked_value(self, x):
        """Sum of per-node values ``sum_i f_i(x[..., i, :])``."""
        x = self._check_stack(x)
        if self._mode == "quadratic":
            e = x - self._centers
            return 0.5 * np.einsum("...ni,nij,...nj->...", e, self._mats, e)
        if self._mode == "ball":
            r = np.linalg.norm(x - self._centers, axis=-1)
            return 0.5 * (np.maximum(r - self._radii, 0.0) ** 2).sum(axis=-1)
        total = 0.0
        for i, c in enumerate(self.components):
            total = total + c.value(x[..., i, :])
        return total

    def total_value(self, z):
        """Team objective F(z) = sum_i f_i(z) at a common point."""
        z = _check_dim(z, self.m)
        total = 0.0
        for c in self.components:
            total = total + c.value(z)
        return total

    def total_grad(self, z):
        z = _check_dim(z, self.m)
        out = self.components[0].grad(z)
        for c in self.components[1:]:
            out = out + c.grad(z)
        return out

    def argmin_sets(self):
        return [c.argmin_set() for c in self.components]

    def describe(self):
        return {"kind": "objectives", "m": self.m, "components": [c.describe() for c in self.components]}


@dataclass
class IntersectionResult:
    """Three-valued intersection decision with an optional witness point."""

    status: str  # "nonempty" | "empty" | "undecided"
    witness: np.ndarray | None = None

    @property
    def nonempty(self) -> bool:
        return self.status == "nonempty"


def _representative(s: ConvexSet) -> np.ndarray:
    if isinstance(s, Point):
        return s.c.copy()
    if isinstance(s, Ball):
        return s.center.copy()
    if isinstance(s, Box):
        return np.clip(np.zeros(s.dim), s.lower, s.upper)
    return np.zeros(s.dim)


def _pair_disjoint(a: ConvexSet, b: ConvexSet) -> bool:
    """Exact separation certificate for supported pairs; False means unknown."""
    if isinstance(a, Point):
        return bool(b.distance(a.c) > 1e-12)
    if isinstance(b, Point):
        return _pair_disjoint(b, a)
    if isinstance(a, Ball) and isinstance(b, Ball):
        return bool(np.linalg.norm(a.center - b.center) > a.radius + b.radius)
    if isinstance(a, Box) and isinstance(b, Box):
        return bool(np.any(np.maximum(a.lower, b.lower) > np.minimum(a.upper, b.upper)))
    if isinstance(a, Ball) and isinstance(b, Box):
        return bool(b.distance(a.center) > a.radius)
    if isinstance(a, Box) and isinstance(b, Ball):
        return _pair_disjoint(b, a)
    return False


def intersection_nonempty(sets, tol=1e-9, max_iter=20000) -> IntersectionResult:
    """Decide whether closed convex sets share a point.

    Box-only and two-ball families are decided exactly.  Otherwise a cyclic
    projection pass either produces a witness within ``tol`` of every set, or
    an exact pairwise separation certificate proves emptiness; anything else
    is reported as undecided rather than guessed.
    """
    sets = list(sets)
    if not sets:
        raise ValueError("at least one set is required")
    dims = {s.dim for s in sets}
    if len(dims) != 1:
        raise ValueError("all sets must share one dimension")

    if len(sets) == 1:
        return IntersectionResult("nonempty", _representative(sets[0]))

    if all(isinstance(s, Box) for s in sets):
        lo = np.max([s.lower for s in sets], axis=0)
        hi = np.min([s.upper for s in sets], axis=0)
        if np.all(lo <= hi):
            mid = np.clip(np.zeros(sets[0].dim), lo, hi)
            return IntersectionResult("nonempty", mid)
        return IntersectionResult("empty")

    if len(sets) == 2 and all(isinstance(s, Ball) for s in sets):
        a, b = sets
        gap = b.center - a.center
        d = float(np.linalg.norm(gap))
        if d > a.radius + b.radius:
            return IntersectionResult("empty")
        if d <= abs(a.radius - b.radius):
            inner = a if a.radius <= b.radius else b
            return IntersectionResult("nonempty", inner.center.copy())
        t = np.clip((d + a.radius - b.radius) / (2.0 * d), 0.0, 1.0)
        return IntersectionResult("nonempty", a.center + t * gap)

    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            if _pair_disjoint(sets[i], sets[j]):
                return IntersectionResult("empty")

    x = np.mean([_representative(s) for s in sets], axis=0)
    for _ in range(max_iter):
        worst = max(float(s.distance(x)) for s in sets)
        if worst <= 0.1 * tol:
            break
        for s in sets:
            x = s.project(x)
    if max(float(s.distance(x)) for s in sets) <= tol:
        return IntersectionResult("nonempty", x)
    return IntersectionResult("undecided")


def interior_simplex(sets, base_point) -> np.ndarray:
    """m+1 affinely independent points interior to every set.

    ``base_point`` must sit strictly inside the intersection; the remaining
    points shift it by half the worst-case interior margin along each axis,
    which keeps them interior because the margin is 1-Lipschitz.
    """
    sets = list(sets)
    base = _vector(base_point, "base point")
    margin = min(float(s.interior_margin(base)) for s in sets)
    if margin <= 0.0:
        raise ValueError("base point is not interior to every set")
    m = base.shape[0]
    pts = [base]
    for k in range(m):
        p = base.copy()
        p[k] += 0.5 * margin
        pts.append(p)
    return np.stack(pts)


@dataclass
class GlobalMinimum:
    """Minimum of the team objective F(z) = sum_i f_i(z)."""

    value: float
    minimizer: np.ndarray
    method: str  # "closed-form" | "intersection" | "numerical"
    tolerance: float


def global_min(objectives: ObjectiveSet, grad_tol=1e-10, max_iter=200000) -> GlobalMinimum:
    """Minimize the team objective over a common decision variable.

    All-quadratic collections with positive-definite total curvature are
    solved in closed form; squared-distance collections with a certified
    nonempty intersection attain zero there.  Any other mix falls back to a
    fixed-step gradient descent driven to the requested gradient norm.
    """
    comps = objectives.components
    if all(isinstance(c, Quadratic) for c in comps):
        q_total = np.sum([c.matrix for c in comps], axis=0)
        eigs = np.linalg.eigvalsh(q_total)
        if eigs[0] > 1e-10:
            rhs = np.sum([c.matrix @ c.center for c in comps], axis=0)
            z = np.linalg.solve(q_total, rhs)
            return GlobalMinimum(float(objectives.total_value(z)), z, "closed-form", 0.0)
    if all(isinstance(c, SquaredDistance) for c in comps):
        res = intersection_nonempty([c.target for c in comps])
        if res.nonempty:
            return GlobalMinimum(0.0, res.witness, "intersection", 0.0)

    lip = sum(c.gradient_lipschitz() for c in comps)
    step = 1.0 / max(lip, 1e-12)
    z = np.mean([_representative(c.argmin_set()) if _has_argmin(c) else np.zeros(objectives.m)
                 for c in comps], axis=0)
    for _ in range(max_iter):
        g = objectives.total_grad(z)
        norm = float(np.linalg.norm(g))
        if norm <= grad_tol:
            break
        z = z - step * g
    norm = float(np.linalg.norm(objectives.total_grad(z)))
    return GlobalMinimum(float(objectives.total_value(z)), z, "numerical", norm)


def _has_argmin(c: ConvexComponent) -> bool:
    try:
        c.argmin_set()
        return True
    except UnsupportedRepresentationError:
        return False
