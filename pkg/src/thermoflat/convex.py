"""Convex functions, Legendre-Fenchel conjugation and growth certificates.

Four function kinds are supported: quadratic b*|x|^2/2, the l1 norm, grid
samples of a convex function (up to two axes), and a linear shift of any of
these.  Conjugates may be +infinity outside their domain; the INFINITY
sentinel below is always produced deliberately, never by overflow.
"""

import dataclasses
import math

import numpy as np

from .config import (
    CONVEXITY_TOL,
    GROWTH_MARGIN,
    GROWTH_MAX_DOUBLINGS,
    GROWTH_START_RADIUS,
    SINGLETON_TOL,
)

INFINITY = math.inf


@dataclasses.dataclass(frozen=True)
class DualPoint:
    """A point of the dual space (tilt coefficients, potential-scale units)."""

    coords: tuple

    def __init__(self, coords):
        arr = np.atleast_1d(np.asarray(coords, dtype=float))
        if not np.all(np.isfinite(arr)):
            raise ValueError("dual point coordinates must be finite")
        object.__setattr__(self, "coords", tuple(arr.tolist()))

    @property
    def array(self):
        return np.array(self.coords)

    @property
    def dim(self):
        return len(self.coords)


@dataclasses.dataclass(frozen=True)
class SubdiffSet:
    """Componentwise interval hull of a subdifferential."""

    lower: tuple
    upper: tuple

    def __init__(self, lower, upper):
        lo = np.atleast_1d(np.asarray(lower, dtype=float))
        hi = np.atleast_1d(np.asarray(upper, dtype=float))
        if lo.shape != hi.shape or np.any(lo > hi + SINGLETON_TOL):
            raise ValueError("invalid subdifferential interval")
        object.__setattr__(self, "lower", tuple(lo.tolist()))
        object.__setattr__(self, "upper", tuple(hi.tolist()))

    @property
    def is_singleton(self):
        return all(u - l <= SINGLETON_TOL for l, u in zip(self.lower, self.upper))

    def distance(self, point):
        """Euclidean distance from a point to the interval hull."""
        p = np.atleast_1d(np.asarray(point, dtype=float))
        lo, hi = np.array(self.lower), np.array(self.upper)
        gap = np.maximum(np.maximum(lo - p, p - hi), 0.0)
        return float(np.linalg.norm(gap))

    def contains(self, point, tol=0.0):
        return self.distance(point) <= tol

    @property
    def midpoint(self):
        return (np.array(self.lower) + np.array(self.upper)) / 2.0


@dataclasses.dataclass(frozen=True)
class GrowthCertificate:
    """Certified search radius: lam*|y| - g*(y) decays beyond safe_radius."""

    lam: float
    safe_radius: float
    decay_samples: tuple  # ((radius, shell sup), ...)


class ConvexSpec:
    """Base class: a convex function with evaluable conjugate/subdifferential."""

    dim: int
    label: str = ""

    def value(self, x):
        raise NotImplementedError

    def value_many(self, xs):
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        return np.array([self.value(row) for row in xs])

    def conjugate(self, y):
        raise NotImplementedError

    def subdiff(self, x):
        raise NotImplementedError

    def _check_dim(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.dim,):
            raise ValueError(
                f"dimension mismatch: expected {self.dim}, got {x.shape}"
            )
        return x


class Quadratic(ConvexSpec):
    """g(x) = beta * |x|^2 / 2 with conjugate |y|^2 / (2 beta)."""

    def __init__(self, beta, dim=1, label=""):
        if beta <= 0:
            raise ValueError("quadratic coefficient must be positive")
        self.beta = float(beta)
        self.dim = int(dim)
        self.label = label

    def value(self, x):
        x = self._check_dim(x)
        return 0.5 * self.beta * float(x @ x)

    def value_many(self, xs):
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        return 0.5 * self.beta * (xs * xs).sum(axis=1)

    def conjugate(self, y):
        y = self._check_dim(y)
        return float(y @ y) / (2.0 * self.beta)

    def subdiff(self, x):
        x = self._check_dim(x)
        g = self.beta * x
        return SubdiffSet(g, g)

    def gradient(self, x):
        return self.beta * self._check_dim(x)


class AbsSum(ConvexSpec):
    """g(x) = sum_i |x_i|; conjugate is the indicator of the sup-norm ball."""

    def __init__(self, dim=1, label=""):
        self.dim = int(dim)
        self.label = label

    def value(self, x):
        x = self._check_dim(x)
        return float(np.abs(x).sum())

    def value_many(self, xs):
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        return np.abs(xs).sum(axis=1)

    def conjugate(self, y):
        y = self._check_dim(y)
        if np.abs(y).max() > 1.0 + SINGLETON_TOL:
            return INFINITY
        return 0.0

    def subdiff(self, x):
        x = self._check_dim(x)
        lo = np.where(x > SINGLETON_TOL, 1.0, -1.0)
        hi = np.where(x < -SINGLETON_TOL, -1.0, 1.0)
        return SubdiffSet(lo, hi)


class GridSampled(ConvexSpec):
    """Convex function given by samples on a rectangular grid (1 or 2 axes)."""

    def __init__(self, grids, values, label=""):
        if isinstance(grids, np.ndarray) and grids.ndim == 1:
            grids = [grids]
        self.grids = [np.asarray(g, dtype=float) for g in grids]
        self.values = np.asarray(values, dtype=float)
        self.dim = len(self.grids)
        self.label = label
        if self.dim not in (1, 2):
            raise ValueError("grid-sampled functions support 1 or 2 axes")
        expected = tuple(len(g) for g in self.grids)
        if self.values.shape != expected:
            raise ValueError("grid/values shape mismatch")
        for g in self.grids:
            if len(g) < 3 or np.any(np.diff(g) <= 0):
                raise ValueError("grids must be strictly increasing with >= 3 points")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid values must be finite")
        self._check_convexity()
        # Node coordinates flattened once; reused by every conjugate call.
        mesh = np.meshgrid(*self.grids, indexing="ij")
        self._nodes = np.stack([m.ravel() for m in mesh], axis=1)
        self._flat = self.values.ravel()

    def _check_convexity(self):
        for axis in range(self.dim):
            v = np.moveaxis(self.values, axis, 0)
            g = self.grids[axis]
            slopes = np.diff(v, axis=0) / np.diff(g).reshape(-1, *([1] * (v.ndim - 1)))
            if np.any(np.diff(slopes, axis=0) < -CONVEXITY_TOL):
                raise ValueError("samples do not define a convex function on the grid")

    def value(self, x):
        x = self._check_dim(x)
        for axis, g in enumerate(self.grids):
            if x[axis] < g[0] - SINGLETON_TOL or x[axis] > g[-1] + SINGLETON_TOL:
                raise ValueError("point outside the sampled grid")
        if self.dim == 1:
            return float(np.interp(x[0], self.grids[0], self.values))
        return float(self._bilinear(np.array([x]))[0])

    def value_many(self, xs):
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        if self.dim == 1:
            return np.interp(xs[:, 0], self.grids[0], self.values)
        return self._bilinear(xs)

    def _bilinear(self, xs):
        gx, gy = self.grids
        i = np.clip(np.searchsorted(gx, xs[:, 0]) - 1, 0, len(gx) - 2)
        j = np.clip(np.searchsorted(gy, xs[:, 1]) - 1, 0, len(gy) - 2)
        tx = (xs[:, 0] - gx[i]) / (gx[i + 1] - gx[i])
        ty = (xs[:, 1] - gy[j]) / (gy[j + 1] - gy[j])
        v = self.values
        return (
            v[i, j] * (1 - tx) * (1 - ty)
            + v[i + 1, j] * tx * (1 - ty)
            + v[i, j + 1] * (1 - tx) * ty
            + v[i + 1, j + 1] * tx * ty
        )

    def conjugate(self, y):
        y = self._check_dim(y)
        return float(np.max(self._nodes @ y - self._flat))

    def subdiff(self, x):
        x = self._check_dim(x)
        lo, hi = [], []
        for axis in range(self.dim):
            g = self.grids[axis]
            if x[axis] <= g[0] + SINGLETON_TOL or x[axis] >= g[-1] - SINGLETON_TOL:
                raise ValueError("boundary subdifferential unavailable")
            line = self._axis_restriction(x, axis)
            i = int(np.searchsorted(g, x[axis]))
            if abs(x[axis] - g[i - 1]) <= SINGLETON_TOL:
                i -= 1
            if abs(x[axis] - g[i]) <= SINGLETON_TOL:
                left = (line[i] - line[i - 1]) / (g[i] - g[i - 1])
                right = (line[i + 1] - line[i]) / (g[i + 1] - g[i])
            else:
                s = (line[i] - line[i - 1]) / (g[i] - g[i - 1])
                left = right = s
            lo.append(left)
            hi.append(right)
        return SubdiffSet(lo, hi)

    def _axis_restriction(self, x, axis):
        """Sample values along the grid line through x parallel to an axis."""
        if self.dim == 1:
            return self.values
        other = 1 - axis
        g = self.grids[other]
        j = np.clip(np.searchsorted(g, x[other]) - 1, 0, len(g) - 2)
        t = (x[other] - g[j]) / (g[j + 1] - g[j])
        v = np.moveaxis(self.values, axis, 0)
        return v[:, j] * (1 - t) + v[:, j + 1] * t


class LinearShift(ConvexSpec):
    """g(x) = base(x) + a.x, so g*(y) = base*(y - a)."""

    def __init__(self, slope, base, label=""):
        self.slope = np.atleast_1d(np.asarray(slope, dtype=float))
        self.base = base
        self.dim = base.dim
        self.label = label
        if self.slope.shape != (self.dim,):
            raise ValueError("slope dimension mismatch")

    def value(self, x):
        x = self._check_dim(x)
        return self.base.value(x) + float(self.slope @ x)

    def value_many(self, xs):
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        return self.base.value_many(xs) + xs @ self.slope

    def conjugate(self, y):
        y = self._check_dim(y)
        return self.base.conjugate(y - self.slope)

    def subdiff(self, x):
        inner = self.base.subdiff(x)
        return SubdiffSet(
            np.array(inner.lower) + self.slope, np.array(inner.upper) + self.slope
        )

    def gradient(self, x):
        return self.base.gradient(x) + self.slope


def conjugate(g, y):
    """g*(y) = sup_x {y.x - g(x)}; +infinity outside the conjugate domain."""
    if isinstance(y, DualPoint):
        y = y.array
    return g.conjugate(y)


def discrete_lft(g, dual_grids):
    """Discrete Legendre-Fenchel transform onto a dual grid.

    Direct O(n_primal * n_dual) maximization; output samples are convex on
    the dual grid by construction.
    """
    if not isinstance(g, GridSampled):
        raise TypeError("discrete_lft expects a GridSampled function")
    if isinstance(dual_grids, np.ndarray) and dual_grids.ndim == 1:
        dual_grids = [dual_grids]
    dual_grids = [np.asarray(d, dtype=float) for d in dual_grids]
    if len(dual_grids) != g.dim or any(len(d) == 0 for d in dual_grids):
        raise ValueError("dual grid must be nonempty and match the dimension")
    mesh = np.meshgrid(*dual_grids, indexing="ij")
    duals = np.stack([m.ravel() for m in mesh], axis=1)
    vals = np.max(duals @ g._nodes.T - g._flat[None, :], axis=1)
    shape = tuple(len(d) for d in dual_grids)
    return GridSampled(dual_grids, vals.reshape(shape), label=f"{g.label}*")


def biconjugate(g, primal_grids, dual_grids):
    """g** on the primal grid: the lower convex envelope of the samples."""
    star = discrete_lft(g, dual_grids)
    return discrete_lft(star, primal_grids)


def subdiff(g, x):
    """Subdifferential of g at x as a componentwise interval hull."""
    return g.subdiff(np.atleast_1d(np.asarray(x, dtype=float)))


def _shell_sup(g, lam, lo, hi, dim, n_radii=33, n_angles=32):
    """sup of lam*|y| - g*(y) over the shell lo <= |y| <= hi (sampled)."""
    radii = np.linspace(lo, hi, n_radii)
    best = -INFINITY
    if dim == 1:
        dirs = np.array([[1.0], [-1.0]])
    else:
        ang = np.linspace(0.0, 2.0 * np.pi, n_angles, endpoint=False)
        dirs = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    for d in dirs:
        for r in radii:
            c = g.conjugate(r * d)
            if c == INFINITY:
                continue
            best = max(best, lam * r - c)
    return best


def growth_radius(g, lam):
    """Certify a radius confining minimizers of g*(y) - lam*|y| terms.

    Doubles R from 1 until sup over the shell [R, 2R] of lam*|y| - g*(y)
    drops a unit margin below the value at the origin.  Raises if 40
    doublings do not suffice (the conjugate lacks minimal linear growth).
    """
    if lam < 0:
        raise ValueError("growth slope must be nonnegative")
    dim = g.dim
    ref = lam * 0.0 - g.conjugate(np.zeros(dim))
    if lam == 0.0:
        radius = GROWTH_START_RADIUS
    else:
        radius = GROWTH_START_RADIUS
        for _ in range(GROWTH_MAX_DOUBLINGS):
            sup = _shell_sup(g, lam, radius, 2 * radius, dim)
            if sup < ref - GROWTH_MARGIN:
                break
            radius *= 2.0
        else:
            raise ArithmeticError(
                f"conjugate lacks minimal linear growth at slope {lam}"
            )
    samples = []
    r = radius
    for _ in range(4):
        sup = _shell_sup(g, lam, r, 2 * r, dim)
        samples.append((r, sup))
        if sup == -INFINITY:
            break
        r *= 2.0
    return GrowthCertificate(lam=lam, safe_radius=radius, decay_samples=tuple(samples))
