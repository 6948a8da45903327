"""Frank-Wolfe for a convex surrogate, with gap-based stopping."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .core import NonFiniteError, inner_product, sq_norm

HARMONIC = "harmonic"
LINESEARCH = "linesearch"
DEMYANOV_RUBINOV = "dr"

#: default cap on inner iterations, as in the large-scale experiments
DEFAULT_MAX_INNER = 10**8


@dataclass(frozen=True)
class StepRule:
    """Step-size rule. ``L`` is only used by Demyanov-Rubinov steps.

    With ``L=None`` the Demyanov-Rubinov rule uses the smoothness constant of
    the surrogate it is applied to.
    """

    kind: str = LINESEARCH
    L: Optional[float] = None

    def __post_init__(self):
        if self.kind not in (HARMONIC, LINESEARCH, DEMYANOV_RUBINOV):
            raise ValueError(f"unknown step rule {self.kind!r}")
        if self.L is not None and not self.L > 0:
            raise ValueError("L must be positive for Demyanov-Rubinov steps")

    @classmethod
    def harmonic(cls):
        return cls(HARMONIC)

    @classmethod
    def linesearch(cls):
        return cls(LINESEARCH)

    @classmethod
    def demyanov_rubinov(cls, L=None):
        return cls(DEMYANOV_RUBINOV, L)

    @classmethod
    def parse(cls, name: str, L=None):
        aliases = {"harmonic": HARMONIC, "linesearch": LINESEARCH, "ls": LINESEARCH,
                   "dr": DEMYANOV_RUBINOV, "demyanov-rubinov": DEMYANOV_RUBINOV}
        try:
            return cls(aliases[name], L)
        except KeyError:
            raise ValueError(f"unknown step rule {name!r}") from None


@dataclass
class SurrogateProblem:
    """Convex function minimized by :func:`fw_solve`.

    ``linesearch(x, d, grad)`` is an optional closed-form minimizer of
    ``value(x + eta d)`` over ``eta`` (``grad`` is the surrogate gradient at
    ``x``); ``value`` is needed otherwise.
    """

    grad: Callable[[np.ndarray], np.ndarray]
    set: object
    L: float
    value: Optional[Callable[[np.ndarray], float]] = None
    linesearch: Optional[Callable[[np.ndarray, np.ndarray, np.ndarray], float]] = None


@dataclass(frozen=True)
class FwResult:
    x: np.ndarray
    inner_iters: int
    last_fw_gap: float
    converged: bool
    first_fw_gap: float


def step_harmonic(k: int) -> float:
    """``2 / (k + 1)`` for the inner index ``k >= 1``."""
    if k < 1:
        raise ValueError("k starts at 1")
    return 2.0 / (k + 1)


def step_demyanov_rubinov(grad, x, s, L: float) -> float:
    """Minimizer of the quadratic upper model along ``s - x``, clipped to [0, 1]."""
    if not L > 0:
        raise ValueError("L must be positive")
    d = np.asarray(x) - np.asarray(s)
    dd = sq_norm(d)
    if dd == 0.0:
        return 0.0
    num = inner_product(grad, d)
    if num <= 0.0:
        return 0.0
    return min(num / (L * dd), 1.0)


def golden_linesearch(fun: Callable[[float], float], xatol: float = 1e-10) -> float:
    """Minimize a unimodal function of ``eta`` over [0, 1].

    Bounded Brent search plus an explicit comparison with both endpoints.
    """
    res = minimize_scalar(fun, bounds=(0.0, 1.0), method="bounded",
                          options={"xatol": xatol})
    best_eta, best_val = float(res.x), float(res.fun)
    for eta in (0.0, 1.0):
        val = fun(eta)
        if val < best_val:
            best_eta, best_val = eta, val
    return best_eta


def step_exact_linesearch(surrogate: SurrogateProblem, x, d, grad=None) -> float:
    """Exact minimizer of the surrogate along ``x + eta d`` for ``eta`` in [0, 1]."""
    if not np.any(d):
        return 0.0
    if surrogate.linesearch is not None:
        if grad is None:
            grad = surrogate.grad(x)
        eta = surrogate.linesearch(x, d, grad)
        if eta is not None and np.isfinite(eta):
            return float(min(max(eta, 0.0), 1.0))
    if surrogate.value is None:
        raise ValueError("exact line search needs a closed form or a surrogate evaluator")
    return golden_linesearch(lambda eta: surrogate.value(x + eta * d))


def fw_solve(
    surrogate: SurrogateProblem,
    x0,
    eps_half: float,
    max_inner: int = DEFAULT_MAX_INNER,
    rule: StepRule = StepRule(),
    first: Optional[tuple] = None,
    callback: Optional[Callable[[int, np.ndarray, float], None]] = None,
) -> FwResult:
    """Run Frank-Wolfe from ``x0`` until the FW gap is at most ``eps_half``.

    Each iteration calls the LMO, checks the gap, then steps; a break returns
    the pre-step iterate. ``first`` may carry ``(grad, lmo_result)`` already
    computed at ``x0`` so the first LMO is not repeated. ``callback(k, x, gap)``
    sees every iterate together with its FW gap.
    """
    if not eps_half > 0:
        raise ValueError("eps_half must be positive")
    if max_inner < 1:
        raise ValueError("max_inner must be >= 1")
    x = np.array(x0, dtype=np.float64, copy=True)
    first_gap = gap = float("nan")
    for k in range(1, max_inner + 1):
        if k == 1 and first is not None:
            grad, lmo = first
        else:
            grad = surrogate.grad(x)
            if not np.all(np.isfinite(grad)):
                raise NonFiniteError("surrogate gradient is not finite")
            lmo = surrogate.set.lmo(grad)
        s = lmo.vertex
        d = s - x
        gap = -inner_product(grad, d)
        if k == 1:
            first_gap = gap
        if callback is not None:
            callback(k, x, gap)
        if gap <= eps_half:
            return FwResult(x, k, gap, True, first_gap)
        if rule.kind == HARMONIC:
            eta = step_harmonic(k)
        elif rule.kind == DEMYANOV_RUBINOV:
            eta = step_demyanov_rubinov(grad, x, s, rule.L or surrogate.L)
        else:
            eta = step_exact_linesearch(surrogate, x, d, grad)
        x = x + eta * d
    return FwResult(x, max_inner, gap, False, first_gap)
