"""Comparison solvers: Frank-Wolfe applied to phi directly, and FW-K.

FW-K replaces the gradient by ``grad f(x) - u`` with ``u`` a fresh subgradient
of ``g`` at every iterate, so it calls the subgradient oracle once per LMO.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .core import (
    CountingOracles,
    DcProblem,
    NonFiniteError,
    OracleCounters,
    SmoothFunction,
    SolveTrace,
    TraceRow,
    as_tensor,
    check_feasible,
    inner_product,
)
from .fw_inner import (
    DEMYANOV_RUBINOV,
    HARMONIC,
    StepRule,
    golden_linesearch,
    step_demyanov_rubinov,
    step_harmonic,
)
from .solver import GAP_REACHED, MAX_LMO, MAX_OUTER, DcfwResult


def _target(gap0, rel_tol, eps_final):
    target = 0.0
    if eps_final is not None:
        target = max(target, eps_final)
    if rel_tol is not None:
        target = max(target, rel_tol * gap0)
    return target


def _segment_step(value, x, d, slope, curvature):
    """Exact minimizer of a function along ``x + eta d``, ``eta`` in [0, 1]."""
    if curvature is not None:
        curv = curvature(d)
        if curv > 0:
            return float(min(max(-slope / curv, 0.0), 1.0))
        # concave or linear along d: an endpoint wins
        return 1.0 if slope + 0.5 * curv < 0 else 0.0
    return golden_linesearch(lambda eta: value(x + eta * d))


def fw_nonconvex(
    phi: SmoothFunction,
    feasible_set,
    x0,
    max_iter: int = 10_000,
    rule: StepRule = StepRule(),
    rel_tol: Optional[float] = 1e-3,
    eps_final: Optional[float] = None,
    max_lmo_calls: Optional[int] = None,
    record_iterates: bool = False,
) -> DcfwResult:
    """Classical FW on ``phi``: ``x <- x + eta (lmo(grad phi(x)) - x)``.

    Stops once the FW gap ``<grad phi(x), x - s>`` is at most
    ``max(eps_final, rel_tol * gap0)``. Line search uses ``phi.curvature``
    when available (closed form for quadratics) and a bounded scalar search
    otherwise; Demyanov-Rubinov steps use ``rule.L`` or ``phi.smoothness``.
    Each trace row is one iteration, recorded before its step.
    """
    x = as_tensor(x0, "x0").copy()
    check_feasible(feasible_set, x)
    counters = OracleCounters()
    trace = SolveTrace()
    gap0 = target = float("nan")
    terminated = MAX_OUTER
    for k in range(1, max_iter + 1):
        grad = phi.grad(x)
        counters.grad_f_calls += 1
        counters.phi_grad_calls += 1
        if not np.all(np.isfinite(grad)):
            raise NonFiniteError("gradient of phi is not finite")
        s = feasible_set.lmo(grad).vertex
        counters.lmo_calls += 1
        d = s - x
        slope = inner_product(grad, d)
        gap = -slope
        value = phi.value(x)
        counters.eval_calls += 1
        if k == 1:
            gap0 = max(gap, 0.0)
            target = _target(gap0, rel_tol, eps_final)
        stop = gap <= target
        trace.append(TraceRow(k, 0 if stop else 1, value, gap, counters.snapshot(),
                              trace.elapsed()), x if record_iterates else None)
        if stop:
            terminated = GAP_REACHED
            break
        if rule.kind == HARMONIC:
            eta = step_harmonic(k)
        elif rule.kind == DEMYANOV_RUBINOV:
            L = rule.L or phi.smoothness
            if L is None:
                raise ValueError("Demyanov-Rubinov steps need rule.L or phi.smoothness")
            eta = step_demyanov_rubinov(grad, x, s, L)
        else:
            eta = _segment_step(phi.value, x, d, slope, phi.curvature)
        x = x + eta * d
        if max_lmo_calls is not None and counters.lmo_calls >= max_lmo_calls:
            terminated = MAX_LMO
            break
    return DcfwResult(x_final=x, trace=trace, terminated_by=terminated, eps0=gap0)


def fw_k(
    problem: DcProblem,
    x0,
    max_iter: int = 10_000,
    rule: StepRule = StepRule(),
    rel_tol: Optional[float] = 1e-3,
    eps_final: Optional[float] = None,
    max_lmo_calls: Optional[int] = None,
    record_iterates: bool = False,
) -> DcfwResult:
    """FW along ``grad f(x) - u`` with ``u`` in the subdifferential of ``g`` at ``x``.

    The subgradient is refreshed every iteration. Line search minimizes the
    surrogate ``f - <u, .>`` along the segment (closed form when the problem
    provides one); Demyanov-Rubinov steps use ``rule.L`` or ``smoothness_f``.
    Descent of ``phi`` is not guaranteed.
    """
    x = as_tensor(x0, "x0").copy()
    check_feasible(problem.set, x)
    oracles = CountingOracles(problem)
    trace = SolveTrace()
    gap0 = target = float("nan")
    terminated = MAX_OUTER
    for k in range(1, max_iter + 1):
        u = oracles.subgrad_g(x)
        grad = oracles.grad_f(x) - u
        if not np.all(np.isfinite(grad)):
            raise NonFiniteError("FW-K direction is not finite")
        s = oracles.set.lmo(grad).vertex
        d = s - x
        slope = inner_product(grad, d)
        gap = -slope
        value = oracles.phi(x)
        if k == 1:
            gap0 = max(gap, 0.0)
            target = _target(gap0, rel_tol, eps_final)
        stop = gap <= target
        trace.append(TraceRow(k, 0 if stop else 1, value, gap, oracles.snapshot(),
                              trace.elapsed()), x if record_iterates else None)
        if stop:
            terminated = GAP_REACHED
            break
        if rule.kind == HARMONIC:
            eta = step_harmonic(k)
        elif rule.kind == DEMYANOV_RUBINOV:
            eta = step_demyanov_rubinov(grad, x, s, rule.L or problem.smoothness_f)
        else:
            eta = None
            if problem.exact_linesearch is not None and np.any(d):
                eta = problem.exact_linesearch(x, d, u)
            elif problem.curvature_f is not None and np.any(d):
                curv = problem.curvature_f(d)
                eta = -slope / curv if curv > 0 else None
            if eta is None or not np.isfinite(eta):
                eta = golden_linesearch(
                    lambda e: oracles.eval_f(x + e * d) - inner_product(u, x + e * d))
            eta = float(min(max(eta, 0.0), 1.0))
        x = x + eta * d
        if max_lmo_calls is not None and oracles.counters.lmo_calls >= max_lmo_calls:
            terminated = MAX_LMO
            break
    return DcfwResult(x_final=x, trace=trace, terminated_by=terminated, eps0=gap0)


def best_gap_so_far(trace: SolveTrace) -> np.ndarray:
    """Running minimum of the recorded FW gaps."""
    return np.minimum.accumulate(trace.column("fw_gap"))
