"""Outer inexact-DCA loop with Frank-Wolfe subproblem solves (DC-FW)."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (
    CountingOracles,
    DcProblem,
    NonFiniteError,
    SolveTrace,
    TraceRow,
    as_tensor,
    check_feasible,
    inner_product,
)
from .fw_inner import StepRule, SurrogateProblem, fw_solve

log = logging.getLogger(__name__)

FIXED = "fixed"
ADAPTIVE = "adaptive"

GAP_REACHED = "GapReached"
MAX_OUTER = "MaxOuter"
MAX_INNER = "MaxInner"
MAX_LMO = "MaxLmo"


@dataclass(frozen=True)
class DcfwConfig:
    """Settings for :func:`dcfw_solve`.

    In ``fixed`` mode every subproblem is solved to FW gap ``eps / 2``. In
    ``adaptive`` mode the tolerance starts at ``beta * eps0``, with ``eps0`` the
    gap at the initial point, and shrinks by ``beta`` whenever the measured gap
    drops below it. The run stops once the measured gap is at most
    ``max(eps_final, rel_tol * eps0)`` (either may be ``None``).
    """

    tolerance_mode: str = ADAPTIVE
    eps: Optional[float] = None
    beta: float = 0.8
    eps_final: Optional[float] = None
    rel_tol: Optional[float] = 1e-3
    max_outer: int = 10_000
    max_inner: int = 100_000
    max_lmo_calls: Optional[int] = None
    rule: StepRule = field(default_factory=StepRule)
    seed: int = 0
    record_iterates: bool = False

    def __post_init__(self):
        if self.tolerance_mode not in (FIXED, ADAPTIVE):
            raise ValueError(f"tolerance_mode must be {FIXED!r} or {ADAPTIVE!r}")
        if self.tolerance_mode == FIXED and not (self.eps is not None and self.eps > 0):
            raise ValueError("fixed tolerance mode needs eps > 0")
        if self.tolerance_mode == ADAPTIVE and not 0 < self.beta < 1:
            raise ValueError("beta must lie in (0, 1)")
        if self.eps_final is not None and not self.eps_final > 0:
            raise ValueError("eps_final must be positive")
        if self.rel_tol is not None and not self.rel_tol >= 0:
            raise ValueError("rel_tol must be nonnegative")
        if self.max_outer < 1 or self.max_inner < 1:
            raise ValueError("iteration limits must be >= 1")


@dataclass
class DcfwResult:
    x_final: np.ndarray
    trace: SolveTrace
    terminated_by: str
    eps0: float = float("nan")
    flags: list = field(default_factory=list)

    @property
    def counters(self):
        return self.trace.final_counters


def termination_target(config, eps0: float) -> float:
    target = 0.0
    if config.eps_final is not None:
        target = max(target, config.eps_final)
    if config.rel_tol is not None:
        target = max(target, config.rel_tol * eps0)
    return target


def make_surrogate(oracles: CountingOracles, u: np.ndarray) -> SurrogateProblem:
    """Convex surrogate ``f(x) - <u, x>`` (constants dropped) around a frozen ``u``."""
    problem = oracles.problem

    def grad(x):
        return oracles.grad_f(x) - u

    def value(x):
        return oracles.eval_f(x) - inner_product(u, x)

    linesearch = None
    if problem.exact_linesearch is not None:
        def linesearch(x, d, grad):
            return problem.exact_linesearch(x, d, u)
    elif problem.curvature_f is not None:
        def linesearch(x, d, grad):
            curv = problem.curvature_f(d)
            return -inner_product(grad, d) / curv if curv > 0 else None

    return SurrogateProblem(grad=grad, set=oracles.set, L=problem.smoothness_f,
                            value=value, linesearch=linesearch)


def dcfw_solve(problem: DcProblem, x0, config: DcfwConfig = DcfwConfig()) -> DcfwResult:
    """Minimize ``f - g`` by inexact DCA with Frank-Wolfe inner solves.

    Each outer iteration freezes ``u_t`` in the subdifferential of ``g`` at
    ``x_t`` (one subgradient call), measures the surrogate FW gap at ``x_t``
    and, unless the run stops, hands that LMO result to the inner solver.
    The trace holds one row per outer iteration: the objective and measured
    gap at ``x_t``, the inner iterations spent from ``x_t`` and the counters
    after that solve.
    """
    x = as_tensor(x0, "x0").copy()
    check_feasible(problem.set, x)
    oracles = CountingOracles(problem)
    trace = SolveTrace()
    flags = []
    eps0 = eps_t = float("nan")
    target = 0.0
    terminated = MAX_OUTER

    for t in range(1, config.max_outer + 1):
        u = oracles.subgrad_g(x)
        if not np.all(np.isfinite(u)):
            raise NonFiniteError("subgradient of g is not finite")
        surrogate = make_surrogate(oracles, u)
        grad0 = surrogate.grad(x)
        if not np.all(np.isfinite(grad0)):
            raise NonFiniteError("surrogate gradient is not finite")
        lmo0 = oracles.set.lmo(grad0)
        gap = -inner_product(grad0, lmo0.vertex - x)
        phi_t = oracles.phi(x)

        if t == 1:
            eps0 = max(gap, 0.0)
            target = termination_target(config, eps0)
            eps_t = config.eps if config.tolerance_mode == FIXED else config.beta * eps0
        elif config.tolerance_mode == ADAPTIVE and gap < eps_t:
            eps_t = config.beta * eps_t

        if gap <= target:
            trace.append(TraceRow(t, 0, phi_t, gap, oracles.snapshot(), trace.elapsed(), eps_t),
                         x if config.record_iterates else None)
            terminated = GAP_REACHED
            break

        iterate = x if config.record_iterates else None
        budget = config.max_inner
        if config.max_lmo_calls is not None:
            # the measurement LMO above is the inner loop's first one
            budget = min(budget, config.max_lmo_calls - oracles.counters.lmo_calls + 1)
        budget = max(budget, 1)
        # eps_t may hit 0 when eps0 == 0 and the target is relative only
        res = fw_solve(surrogate, x, max(eps_t, 1e-300) / 2.0, budget, config.rule,
                       first=(grad0, lmo0))
        exhausted = not res.converged
        if exhausted:
            flags.append(("inner_exhausted", t))
        trace.append(TraceRow(t, res.inner_iters, phi_t, gap, oracles.snapshot(),
                              trace.elapsed(), eps_t, exhausted), iterate)
        x = res.x
        if config.max_lmo_calls is not None and oracles.counters.lmo_calls >= config.max_lmo_calls:
            terminated = MAX_LMO
            break
    else:
        if trace.rows and trace.rows[-1].inner_exhausted:
            terminated = MAX_INNER

    log.debug("dcfw stopped by %s after %d outer iterations", terminated, len(trace))
    return DcfwResult(x_final=x, trace=trace, terminated_by=terminated, eps0=eps0, flags=flags)


def descent_certificate(trace: SolveTrace, eps: float) -> bool:
    """True iff ``phi(x_{t+1}) <= phi(x_t) + eps / 2`` across consecutive rows."""
    phis = [r.phi for r in trace.rows]
    return all(b <= a + eps / 2.0 for a, b in zip(phis, phis[1:]))
