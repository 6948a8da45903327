"""Feasible sets with linear minimization, projection, diameter and membership."""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass

import numpy as np

from .core import FEAS_TOL, NonFiniteError, inner_product
from .lap import permutation_matrix, solve_lap


@dataclass(frozen=True)
class LmoResult:
    vertex: np.ndarray
    objective_value: float


def _finite_direction(direction, shape):
    direction = np.asarray(direction, dtype=np.float64)
    if direction.shape != shape:
        raise ValueError(f"direction shape {direction.shape} does not match set shape {shape}")
    if not np.all(np.isfinite(direction)):
        raise NonFiniteError("LMO direction contains non-finite entries")
    return direction


class FeasibleSet(abc.ABC):
    """Compact convex set accessed through its linear minimization oracle."""

    #: strong-convexity modulus of the set, ``None`` when not strongly convex
    strong_convexity: float | None = None
    #: whether :meth:`project` returns the exact Euclidean projection
    exact_projection: bool = True

    shape: tuple

    @abc.abstractmethod
    def _lmo(self, direction: np.ndarray) -> np.ndarray: ...

    @abc.abstractmethod
    def _project(self, point: np.ndarray) -> np.ndarray: ...

    @abc.abstractmethod
    def violation(self, x: np.ndarray) -> tuple[float, str]:
        """Largest constraint residual and a description of that constraint."""

    @property
    @abc.abstractmethod
    def diameter(self) -> float: ...

    @abc.abstractmethod
    def random_point(self, rng: np.random.Generator) -> np.ndarray: ...

    def lmo(self, direction) -> LmoResult:
        direction = _finite_direction(direction, self.shape)
        vertex = self._lmo(direction)
        return LmoResult(vertex=vertex, objective_value=inner_product(direction, vertex))

    def project(self, point) -> np.ndarray:
        point = np.asarray(point, dtype=np.float64)
        if not np.all(np.isfinite(point)):
            raise NonFiniteError("projection input contains non-finite entries")
        return self._project(point)

    def check(self, x, tol: float = FEAS_TOL) -> tuple[bool, str]:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != self.shape:
            return False, f"shape {x.shape} differs from set shape {self.shape}"
        amount, what = self.violation(x)
        if amount > tol:
            return False, f"{what} violated by {amount:.3e} (tolerance {tol:g})"
        return True, ""

    def contains(self, x, tol: float = FEAS_TOL) -> bool:
        return self.check(x, tol)[0]


class Simplex(FeasibleSet):
    """Probability simplex ``{x >= 0, sum(x) = 1}`` in ``R^d``."""

    def __init__(self, d: int):
        if d < 1:
            raise ValueError("d must be >= 1")
        self.d = d
        self.shape = (d,)

    def _lmo(self, direction):
        v = np.zeros(self.d)
        v[int(np.argmin(direction))] = 1.0
        return v

    def _project(self, point):
        # sort-based exact projection
        u = np.sort(point)[::-1]
        css = np.cumsum(u) - 1.0
        ind = np.arange(1, self.d + 1)
        rho = ind[u - css / ind > 0][-1]
        theta = css[rho - 1] / rho
        return np.maximum(point - theta, 0.0)

    def violation(self, x):
        neg = float(max(0.0, -x.min()))
        tot = abs(float(x.sum()) - 1.0)
        return (neg, "nonnegativity") if neg >= tot else (tot, "sum-to-one")

    @property
    def diameter(self):
        return math.sqrt(2.0) if self.d > 1 else 0.0

    def random_point(self, rng):
        return rng.dirichlet(np.ones(self.d))

    def __repr__(self):
        return f"Simplex({self.d})"


class BoxLinf(FeasibleSet):
    """Infinity-norm ball ``{x : |x_i - c_i| <= r}``."""

    def __init__(self, center, radius: float, dim: int | None = None):
        center = np.asarray(center, dtype=np.float64)
        if center.ndim == 0:
            if dim is None:
                raise ValueError("dim is required with a scalar center")
            center = np.full(dim, float(center))
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.center = center
        self.radius = float(radius)
        self.shape = center.shape

    def _lmo(self, direction):
        sign = np.where(direction >= 0, 1.0, -1.0)  # sign(0) = +1
        return self.center - self.radius * sign

    def _project(self, point):
        return np.clip(point, self.center - self.radius, self.center + self.radius)

    def violation(self, x):
        return float(max(0.0, np.max(np.abs(x - self.center)) - self.radius)), "box bound"

    @property
    def diameter(self):
        return 2.0 * self.radius * math.sqrt(self.center.size)

    def random_point(self, rng):
        return self.center + self.radius * rng.uniform(-1.0, 1.0, size=self.shape)

    def __repr__(self):
        return f"BoxLinf(dim={self.center.size}, radius={self.radius})"


class BallL2(FeasibleSet):
    """Euclidean ball; ``1/radius``-strongly convex."""

    def __init__(self, center, radius: float):
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.center = np.asarray(center, dtype=np.float64)
        self.radius = float(radius)
        self.shape = self.center.shape
        self.strong_convexity = 1.0 / self.radius

    def _lmo(self, direction):
        nrm = np.linalg.norm(direction)
        if nrm == 0:
            return self.center.copy()
        return self.center - self.radius * direction / nrm

    def _project(self, point):
        diff = point - self.center
        nrm = np.linalg.norm(diff)
        if nrm <= self.radius:
            return point.copy()
        return self.center + diff * (self.radius / nrm)

    def violation(self, x):
        return float(max(0.0, np.linalg.norm(x - self.center) - self.radius)), "ball radius"

    @property
    def diameter(self):
        return 2.0 * self.radius

    def random_point(self, rng):
        z = rng.standard_normal(self.shape)
        r = self.radius * rng.uniform() ** (1.0 / max(z.size, 1))
        return self.center + r * z / np.linalg.norm(z)

    def __repr__(self):
        return f"BallL2(dim={self.center.size}, radius={self.radius})"


class SpectralBall(FeasibleSet):
    """``d x d`` matrices with spectral norm at most ``radius``."""

    def __init__(self, d: int, radius: float = 1.0):
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.d = d
        self.radius = float(radius)
        self.shape = (d, d)

    def _lmo(self, direction):
        if not np.any(direction):
            return np.zeros(self.shape)
        u, _, vt = np.linalg.svd(direction)
        return -self.radius * (u @ vt)

    def _project(self, point):
        u, s, vt = np.linalg.svd(point)
        return (u * np.minimum(s, self.radius)) @ vt

    def violation(self, x):
        return float(max(0.0, np.linalg.norm(x, 2) - self.radius)), "spectral norm bound"

    @property
    def diameter(self):
        return 2.0 * self.radius * math.sqrt(self.d)

    def random_point(self, rng):
        z = rng.standard_normal(self.shape)
        return z * (self.radius * rng.uniform() / np.linalg.norm(z, 2))

    def __repr__(self):
        return f"SpectralBall({self.d}, radius={self.radius})"


def affine_doubly_stochastic(x: np.ndarray) -> np.ndarray:
    """Projection onto the affine set ``{X 1 = 1, X^T 1 = 1}``."""
    n = x.shape[0]
    r = x.sum(axis=1) - 1.0
    c = x.sum(axis=0) - 1.0
    s = x.sum() - n
    return x - r[:, None] / n - c[None, :] / n + s / n**2


def alternating_projections(x: np.ndarray, sweeps: int = 1000) -> np.ndarray:
    """Plain alternating projections between the affine set and ``X >= 0``.

    Converges to a doubly stochastic matrix, not necessarily the nearest one.
    """
    x = np.array(x, dtype=np.float64, copy=True)
    for _ in range(sweeps):
        x = np.maximum(affine_doubly_stochastic(x), 0.0)
    return x


class Birkhoff(FeasibleSet):
    """Doubly stochastic ``n x n`` matrices; LMO by linear assignment."""

    exact_projection = False

    def __init__(self, n: int, sweeps: int = 1000):
        if n < 1:
            raise ValueError("n must be >= 1")
        self.n = n
        self.sweeps = sweeps
        self.shape = (n, n)

    def _lmo(self, direction):
        return permutation_matrix(solve_lap(direction).perm)

    def _project(self, point):
        return alternating_projections(point, self.sweeps)

    def violation(self, x):
        cands = [
            (float(max(0.0, -x.min())), "nonnegativity"),
            (float(np.max(np.abs(x.sum(axis=1) - 1.0))), "row sums"),
            (float(np.max(np.abs(x.sum(axis=0) - 1.0))), "column sums"),
        ]
        return max(cands, key=lambda t: t[0])

    @property
    def diameter(self):
        return math.sqrt(2.0 * self.n) if self.n > 1 else 0.0

    def random_point(self, rng, terms: int = 4):
        w = rng.dirichlet(np.ones(terms))
        return sum(wi * permutation_matrix(rng.permutation(self.n)) for wi in w)

    def __repr__(self):
        return f"Birkhoff({self.n})"
