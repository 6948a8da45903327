"""Stationarity certificates: gap_DC, gap_PGM, gap_PPM and the surrogate FW gap."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .core import DcProblem, SmoothFunction, inner_product, sq_norm
from .fw_inner import FwResult, StepRule, SurrogateProblem, fw_solve

# decompositions whose f is (c/2)||x||^2, keyed to the name of c in ``params``
_QUADRATIC_F = {"pgm": "L", "qap_v2": "L", "weakly_convex_pgm": "omega", "composite_pgm": "omega"}

DEFAULT_SUBSOLVE_ITERS = 200_000


class GapValue(NamedTuple):
    value: float
    bracket: float


@dataclass(frozen=True)
class GapReport:
    gap_dc: float
    gap_dc_bracket: float
    fw_gap: float
    gap_pgm: Optional[float] = None
    gap_ppm: Optional[float] = None


def _smooth_phi(problem: DcProblem) -> SmoothFunction:
    """``phi`` with its gradient; assumes ``g`` is differentiable."""
    if problem.source is not None and problem.kind in (
            "pgm", "ppm", "qap_v2", "qap_v3", "direct"):
        return problem.source
    return SmoothFunction(lambda x: problem.eval_f(x) - problem.eval_g(x),
                          lambda x: problem.grad_f(x) - problem.subgrad_g(x))


def _default_L(problem: DcProblem, L):
    if L is not None:
        return float(L)
    for key in ("L", "omega"):
        if key in problem.params:
            return float(problem.params[key])
    raise ValueError("L is required for this problem")


def fw_gap(problem: DcProblem, x) -> float:
    """Surrogate FW gap ``<grad f(x) - u, x - s>`` with ``u`` the subgradient at ``x``."""
    grad = problem.grad_f(x) - problem.subgrad_g(x)
    s = problem.set.lmo(grad).vertex
    return inner_product(grad, x - s)


def _subsolve(surrogate: SurrogateProblem, x0, tol, max_inner, subsolver):
    if subsolver not in ("auto", "fw", "pg"):
        raise ValueError(f"unknown subsolver {subsolver!r}")
    if subsolver == "pg" or (subsolver == "auto"
                             and getattr(surrogate.set, "exact_projection", False)):
        return _projected_gradient(surrogate, x0, tol, max_inner)
    rule = StepRule.linesearch() if surrogate.linesearch is not None \
        else StepRule.demyanov_rubinov()
    return fw_solve(surrogate, x0, tol, max_inner, rule)


def _projected_gradient(surrogate: SurrogateProblem, x0, tol: float, max_iter: int):
    """Projected gradient with step ``1/L``, stopped on the FW gap ``<= tol``."""
    y = np.array(x0, dtype=np.float64, copy=True)
    first_gap = gap = float("nan")
    for k in range(1, max_iter + 1):
        grad = surrogate.grad(y)
        gap = -inner_product(grad, surrogate.set.lmo(grad).vertex - y)
        if k == 1:
            first_gap = gap
        if gap <= tol:
            return FwResult(y, k, gap, True, first_gap)
        y = surrogate.set.project(y - grad / surrogate.L)
    return FwResult(y, max_iter, gap, False, first_gap)


def gap_dc(problem: DcProblem, x, tol: float = 1e-8, method: str = "auto",
           max_inner: int = DEFAULT_SUBSOLVE_ITERS, subsolver: str = "auto") -> GapValue:
    """``max_y f(x) - f(y) - <u, x - y>`` for the subgradient ``u`` returned at ``x``.

    ``method="closed"`` (or ``"auto"`` when available) uses the projection
    formula valid when ``f`` is a multiple of ``||x||^2/2`` and the set has an
    exact projection; the bracket is then 0. Otherwise the convex problem
    ``min_y f(y) - <u, y>`` is solved from ``x`` to FW gap ``tol``: the value
    returned is a lower bound and ``value + bracket`` an upper bound on the
    true gap. ``subsolver`` is ``"fw"``, ``"pg"`` (projected gradient, needs an
    exact projection) or ``"auto"``, which prefers ``"pg"`` when possible.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if method not in ("auto", "closed", "generic"):
        raise ValueError(f"unknown gap method {method!r}")
    x = np.asarray(x, dtype=np.float64)
    u = problem.subgrad_g(x)
    base = problem.eval_f(x) - inner_product(u, x)
    closed_ok = problem.kind in _QUADRATIC_F and problem.set.exact_projection
    if method == "closed" and not closed_ok:
        raise ValueError(f"no closed-form gap for decomposition {problem.kind!r} on {problem.set!r}")
    if method in ("auto", "closed") and closed_ok:
        c = float(problem.params[_QUADRATIC_F[problem.kind]])
        y = problem.set.project(u / c)
        return GapValue(base - (problem.eval_f(y) - inner_product(u, y)), 0.0)

    linesearch = None
    if problem.exact_linesearch is not None:
        def linesearch(y, d, grad):
            return problem.exact_linesearch(y, d, u)
    elif problem.curvature_f is not None:
        def linesearch(y, d, grad):
            curv = problem.curvature_f(d)
            return -inner_product(grad, d) / curv if curv > 0 else None
    surrogate = SurrogateProblem(
        grad=lambda y: problem.grad_f(y) - u,
        set=problem.set,
        L=problem.smoothness_f,
        value=lambda y: problem.eval_f(y) - inner_product(u, y),
        linesearch=linesearch,
    )
    res = _subsolve(surrogate, x, tol, max_inner, subsolver)
    y = res.x
    return GapValue(base - (problem.eval_f(y) - inner_product(u, y)), max(res.last_fw_gap, 0.0))


def gap_pgm(problem: DcProblem, x, L: Optional[float] = None) -> float:
    """``L/2 ||x - proj(x - grad phi(x) / L)||^2``."""
    if not hasattr(problem.set, "project"):
        raise ValueError(f"{problem.set!r} has no projection")
    L = _default_L(problem, L)
    x = np.asarray(x, dtype=np.float64)
    phi = _smooth_phi(problem)
    y = problem.set.project(x - phi.grad(x) / L)
    return 0.5 * L * sq_norm(x - y)


def prox_point(phi: SmoothFunction, feasible_set, x, L: float, prox_tol: float,
               max_inner: int = DEFAULT_SUBSOLVE_ITERS, method: str = "auto") -> FwResult:
    """``argmin_y phi(y) + L/2 ||y - x||^2`` over the set, started at ``x``.

    ``method="fw"`` runs Frank-Wolfe; ``"pg"`` runs projected gradient, which
    avoids FW's slow tail when the prox point is interior. ``"auto"`` picks
    ``"pg"`` on sets with an exact projection. Both stop once the FW gap of the
    prox objective is at most ``prox_tol``, which bounds its suboptimality.
    Requires ``phi + L/2 ||.||^2`` convex on the set.
    """
    x = np.asarray(x, dtype=np.float64)
    linesearch = None
    if phi.curvature is not None:
        def linesearch(y, d, grad):
            curv = phi.curvature(d) + L * sq_norm(d)
            return -inner_product(grad, d) / curv if curv > 0 else None
    L_phi = phi.smoothness if phi.smoothness is not None else L
    surrogate = SurrogateProblem(
        grad=lambda y: phi.grad(y) + L * (y - x),
        set=feasible_set,
        L=L_phi + L,
        value=lambda y: phi.value(y) + 0.5 * L * sq_norm(y - x),
        linesearch=linesearch,
    )
    return _subsolve(surrogate, x, prox_tol, max_inner, method)


def gap_ppm(problem: DcProblem, x, L: Optional[float] = None,
            prox_tol: Optional[float] = None, max_inner: int = DEFAULT_SUBSOLVE_ITERS) -> float:
    """``L/2 ||x - prox(x)||^2`` with the prox solved to suboptimality ``prox_tol``.

    The default tolerance is ``1e-8 (1 + |phi(x)|)``.
    """
    L = _default_L(problem, L)
    x = np.asarray(x, dtype=np.float64)
    phi = _smooth_phi(problem)
    if prox_tol is None:
        prox_tol = 1e-8 * (1.0 + abs(phi.value(x)))
    res = prox_point(phi, problem.set, x, L, prox_tol, max_inner)
    return 0.5 * L * sq_norm(x - res.x)


def gap_report(problem: DcProblem, x, tol: float = 1e-8, L: Optional[float] = None,
               with_pgm: bool = True, with_ppm: bool = True) -> GapReport:
    value, bracket = gap_dc(problem, x, tol)
    pgm_val = ppm_val = None
    if with_pgm:
        pgm_val = gap_pgm(problem, x, L)
    if with_ppm:
        ppm_val = gap_ppm(problem, x, L)
    return GapReport(gap_dc=value, gap_dc_bracket=bracket, fw_gap=fw_gap(problem, x),
                     gap_pgm=pgm_val, gap_ppm=ppm_val)


# --- gap landscape of sin(pi x1) cos(pi x2) ------------------------------------


def sincos_phi() -> SmoothFunction:
    """``sin(pi x1) cos(pi x2)``, which is ``pi^2``-smooth."""

    def value(x):
        return math.sin(math.pi * x[0]) * math.cos(math.pi * x[1])

    def grad(x):
        a, b = math.pi * x[0], math.pi * x[1]
        return np.array([math.pi * math.cos(a) * math.cos(b), -math.pi * math.sin(a) * math.sin(b)])

    return SmoothFunction(value, grad, smoothness=math.pi**2, name="sincos")


def grid_gaps(phi: SmoothFunction, feasible_set, L: float, resolution: int = 81,
              prox_tol: Optional[float] = None, lo: float = -1.0, hi: float = 1.0):
    """Evaluate ``phi``, gap_PGM and gap_PPM on a uniform ``resolution^2`` grid.

    Returns an array with columns ``(x1, x2, phi, gap_pgm, gap_ppm)``, rows in
    row-major order of ``(x1, x2)``.
    """
    if resolution < 3:
        raise ValueError("resolution must be >= 3")
    from .decompositions import ppm

    problem = ppm(phi, L, feasible_set)
    ticks = np.linspace(lo, hi, resolution)
    rows = []
    for a in ticks:
        for b in ticks:
            x = np.array([a, b])
            rows.append((a, b, phi.value(x), gap_pgm(problem, x, L),
                         gap_ppm(problem, x, L, prox_tol)))
    return np.array(rows)
