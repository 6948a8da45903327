"""Shared numeric containers, the DC problem bundle and oracle-call accounting.

Arrays are plain ``numpy.ndarray`` objects of dtype float64. Vectors have
shape ``(d,)`` and matrices ``(r, c)``; every pairing ``<a, b>`` is the
Euclidean (Frobenius for matrices) inner product.
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

#: Absolute tolerance on constraint residuals when checking membership.
FEAS_TOL = 1e-9


class InfeasiblePointError(ValueError):
    """Raised when a point violates the feasible set beyond ``FEAS_TOL``."""


class NonFiniteError(ValueError):
    """Raised when an oracle receives or produces NaN/Inf values."""


def as_tensor(x, name: str = "x") -> np.ndarray:
    """Return ``x`` as a float64 array, rejecting non-finite entries."""
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains non-finite entries")
    return arr


def inner_product(a, b) -> float:
    """Sum of elementwise products of two arrays of identical shape."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.vdot(a, b))


def sq_norm(a) -> float:
    return inner_product(a, a)


class SmoothFunction:
    """A differentiable function with call counting.

    Parameters
    ----------
    value : callable
        ``x -> float``.
    grad : callable
        ``x -> ndarray`` of the same shape as ``x``.
    smoothness : float, optional
        Lipschitz constant of ``grad`` if known.
    curvature : callable, optional
        For quadratic functions, ``d -> <d, H d>`` with ``H`` the (constant)
        Hessian. Enables closed-form line searches.
    """

    def __init__(self, value, grad, smoothness=None, curvature=None, name="phi"):
        self._value = value
        self._grad = grad
        self.smoothness = smoothness
        self.curvature = curvature
        self.name = name
        self.value_calls = 0
        self.grad_calls = 0

    def value(self, x) -> float:
        self.value_calls += 1
        return float(self._value(x))

    def grad(self, x) -> np.ndarray:
        self.grad_calls += 1
        return np.asarray(self._grad(x), dtype=np.float64)

    __call__ = value


@dataclass
class OracleCounters:
    """Oracle calls made during one solve.

    ``phi_grad_calls`` counts gradient evaluations of the underlying smooth
    objective for decompositions built from one (pgm, ppm, ...).
    """

    grad_f_calls: int = 0
    subgrad_g_calls: int = 0
    lmo_calls: int = 0
    eval_calls: int = 0
    projection_calls: int = 0
    phi_grad_calls: int = 0

    def snapshot(self) -> "OracleCounters":
        return dataclasses.replace(self)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    def dominated_by(self, other: "OracleCounters") -> bool:
        """True if every counter here is <= the matching one in ``other``."""
        mine, theirs = self.as_dict(), other.as_dict()
        return all(mine[k] <= theirs[k] for k in mine)


@dataclass(frozen=True)
class DcProblem:
    """Oracles for ``phi = f - g`` over a compact convex set.

    ``exact_linesearch(x, d, u)`` returns the minimizer over ``[0, 1]`` of the
    surrogate ``f(x + eta d) - <u, x + eta d>``. ``kind`` and ``params`` record
    which decomposition produced the problem (used for closed-form gaps).
    """

    eval_f: Callable[[np.ndarray], float]
    grad_f: Callable[[np.ndarray], np.ndarray]
    eval_g: Callable[[np.ndarray], float]
    subgrad_g: Callable[[np.ndarray], np.ndarray]
    smoothness_f: float
    set: "FeasibleSetLike"
    strong_convexity_f: float = 0.0
    exact_linesearch: Optional[Callable[[np.ndarray, np.ndarray, np.ndarray], float]] = None
    curvature_f: Optional[Callable[[np.ndarray], float]] = None
    source: Optional[SmoothFunction] = None
    kind: str = "direct"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.smoothness_f > 0:
            raise ValueError("smoothness_f must be positive")
        if self.strong_convexity_f < 0:
            raise ValueError("strong_convexity_f must be nonnegative")

    def phi(self, x) -> float:
        return phi(self, x)


# Anything exposing lmo/project/diameter/contains (see ``dcfw.oracles``).
FeasibleSetLike = object


def check_feasible(feasible_set, x, tol: float = FEAS_TOL) -> None:
    ok, why = feasible_set.check(x, tol)
    if not ok:
        raise InfeasiblePointError(why)


def phi(problem: DcProblem, x) -> float:
    """Evaluate ``f(x) - g(x)`` at a feasible point."""
    x = as_tensor(x)
    check_feasible(problem.set, x)
    return float(problem.eval_f(x)) - float(problem.eval_g(x))


class CountingSet:
    """Proxy for a feasible set that counts LMO and projection calls."""

    def __init__(self, base, counters: OracleCounters):
        self.base = base
        self.counters = counters

    def lmo(self, direction):
        self.counters.lmo_calls += 1
        return self.base.lmo(direction)

    def project(self, point):
        self.counters.projection_calls += 1
        return self.base.project(point)

    def __getattr__(self, name):
        return getattr(self.base, name)


class CountingOracles:
    """Per-solve view of a :class:`DcProblem` whose oracles update counters."""

    def __init__(self, problem: DcProblem, counters: Optional[OracleCounters] = None):
        self.problem = problem
        self.counters = counters if counters is not None else OracleCounters()
        self.set = CountingSet(problem.set, self.counters)
        src = problem.source
        self._phi_grad_base = src.grad_calls if src is not None else 0

    def eval_f(self, x) -> float:
        self.counters.eval_calls += 1
        return float(self.problem.eval_f(x))

    def eval_g(self, x) -> float:
        self.counters.eval_calls += 1
        return float(self.problem.eval_g(x))

    def phi(self, x) -> float:
        val = self.eval_f(x) - self.eval_g(x)
        if not np.isfinite(val):
            raise NonFiniteError("objective is not finite")
        return val

    def grad_f(self, x) -> np.ndarray:
        self.counters.grad_f_calls += 1
        return np.asarray(self.problem.grad_f(x), dtype=np.float64)

    def subgrad_g(self, x) -> np.ndarray:
        self.counters.subgrad_g_calls += 1
        return np.asarray(self.problem.subgrad_g(x), dtype=np.float64)

    def snapshot(self) -> OracleCounters:
        src = self.problem.source
        if src is not None:
            self.counters.phi_grad_calls = src.grad_calls - self._phi_grad_base
        return self.counters.snapshot()


@dataclass(frozen=True)
class TraceRow:
    outer_iter: int
    inner_iters: int
    phi: float
    fw_gap: float
    counters: OracleCounters
    elapsed: float
    eps: float = float("nan")
    inner_exhausted: bool = False


class SolveTrace:
    """Per-iteration record of a solve.

    Rows must arrive with strictly increasing ``outer_iter`` and componentwise
    nondecreasing counters.
    """

    columns = (
        "outer_iter", "inner_iters", "phi", "fw_gap", "eps", "inner_exhausted",
        "grad_f_calls", "subgrad_g_calls", "lmo_calls", "eval_calls",
        "projection_calls", "phi_grad_calls", "elapsed",
    )

    def __init__(self):
        self.rows: list[TraceRow] = []
        self.iterates: list[np.ndarray] = []
        self._t0 = time.perf_counter()

    def elapsed(self) -> float:
        return time.perf_counter() - self._t0

    def append(self, row: TraceRow, iterate: Optional[np.ndarray] = None) -> None:
        if self.rows:
            last = self.rows[-1]
            if row.outer_iter <= last.outer_iter:
                raise ValueError("outer_iter must be strictly increasing")
            if not last.counters.dominated_by(row.counters):
                raise ValueError("oracle counters decreased between rows")
        self.rows.append(row)
        if iterate is not None:
            self.iterates.append(np.array(iterate, copy=True))

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def __getitem__(self, i):
        return self.rows[i]

    def column(self, name: str) -> np.ndarray:
        if name in OracleCounters.__dataclass_fields__:
            return np.array([getattr(r.counters, name) for r in self.rows])
        return np.array([getattr(r, name) for r in self.rows])

    def records(self) -> list[dict]:
        out = []
        for r in self.rows:
            rec = {
                "outer_iter": r.outer_iter,
                "inner_iters": r.inner_iters,
                "phi": r.phi,
                "fw_gap": r.fw_gap,
                "eps": r.eps,
                "inner_exhausted": int(r.inner_exhausted),
            }
            rec.update(r.counters.as_dict())
            rec["elapsed"] = r.elapsed
            out.append(rec)
        return out

    @property
    def final_counters(self) -> OracleCounters:
        return self.rows[-1].counters if self.rows else OracleCounters()


def numerical_gradient(func, x, step: float = 1e-6) -> np.ndarray:
    """Central finite differences of a scalar function."""
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    flat = g.reshape(-1)
    xf = x.reshape(-1)
    for i in range(xf.size):
        e = np.zeros_like(xf)
        e[i] = step
        flat[i] = (func((xf + e).reshape(x.shape)) - func((xf - e).reshape(x.shape))) / (2 * step)
    return g


def midpoint_convexity_violation(func, a_points, b_points) -> float:
    """Largest value of ``f((a+b)/2) - (f(a)+f(b))/2`` over the sampled pairs.

    Nonpositive (up to rounding) for a convex function.
    """
    worst = -np.inf
    for a, b in zip(a_points, b_points):
        worst = max(worst, func(0.5 * (a + b)) - 0.5 * (func(a) + func(b)))
    return float(worst)


def check_convexity(problem: DcProblem, rng: np.random.Generator, pairs: int = 1000,
                    tol: float = 1e-9) -> None:
    """Debug check: sampled midpoint convexity of ``f`` and ``g`` on the set.

    Raises ``AssertionError`` naming the offending component.
    """
    a = [problem.set.random_point(rng) for _ in range(pairs)]
    b = [problem.set.random_point(rng) for _ in range(pairs)]
    for name, fn in (("f", problem.eval_f), ("g", problem.eval_g)):
        scale = 1.0 + max(abs(fn(p)) for p in a[:20])
        viol = midpoint_convexity_violation(fn, a, b)
        if viol > tol * scale:
            raise AssertionError(f"{name} fails midpoint convexity by {viol:.3e}")
