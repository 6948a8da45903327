"""Constructors of :class:`~dcfw.core.DcProblem` for the supported f/g splits.

=================  ==============================  ==============================
kind               f                               g
=================  ==============================  ==============================
direct             user supplied                   user supplied
pgm                L/2 ||x||^2                     L/2 ||x||^2 - phi
ppm                phi + L/2 ||x||^2               L/2 ||x||^2
weakly_convex_pgm  w/2 ||x||^2                     w/2 ||x||^2 - phi
composite_pgm      w/2 ||x||^2                     w/2 ||x||^2 - p + q
composite_ppm      p + w/2 ||x||^2                 w/2 ||x||^2 + q
qap_v1             1/4 ||A^T X + X B||^2           1/4 ||A^T X - X B||^2
qap_v2             L/2 ||X||^2                     L/2 ||X||^2 - <A^T X, X B>
qap_v3             <A^T X, X B> + L/2 ||X||^2      L/2 ||X||^2
=================  ==============================  ==============================
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .core import DcProblem, SmoothFunction, inner_product, sq_norm
from .fw_inner import golden_linesearch

log = logging.getLogger(__name__)


def _positive(name, value):
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value}")
    return float(value)


def quadratic_linesearch(grad_f, curvature_f):
    """Closed-form step for a quadratic ``f``: minimize ``f(x+eta d) - <u, x+eta d>``.

    Returns ``None`` when the curvature along ``d`` is not positive, which
    sends the caller to its numerical fallback.
    """

    def linesearch(x, d, u):
        curv = curvature_f(d)
        if curv <= 0:
            return None
        return -inner_product(grad_f(x) - u, d) / curv

    return linesearch


def direct(eval_f, grad_f, eval_g, subgrad_g, smoothness_f, feasible_set,
           strong_convexity_f=0.0, curvature_f=None, exact_linesearch=None) -> DcProblem:
    """Wrap user-supplied oracles.

    A quadratic ``f`` may pass ``curvature_f(d) = <d, H d>``; the solver then
    takes closed-form exact steps from the surrogate gradient it already has.
    """
    return DcProblem(eval_f=eval_f, grad_f=grad_f, eval_g=eval_g, subgrad_g=subgrad_g,
                     smoothness_f=_positive("smoothness_f", smoothness_f), set=feasible_set,
                     strong_convexity_f=strong_convexity_f, curvature_f=curvature_f,
                     exact_linesearch=exact_linesearch, kind="direct")


def pgm(phi: SmoothFunction, L: float, feasible_set) -> DcProblem:
    """DCA on this split is projected gradient; FW solves the projections."""
    L = _positive("L", L)

    def eval_f(x):
        return 0.5 * L * sq_norm(x)

    def grad_f(x):
        return L * np.asarray(x)

    def eval_g(x):
        return 0.5 * L * sq_norm(x) - phi.value(x)

    def subgrad_g(x):
        return L * np.asarray(x) - phi.grad(x)

    def curvature_f(d):
        return L * sq_norm(d)

    return DcProblem(eval_f=eval_f, grad_f=grad_f, eval_g=eval_g, subgrad_g=subgrad_g,
                     smoothness_f=L, set=feasible_set, strong_convexity_f=L,
                     curvature_f=curvature_f,
                     exact_linesearch=quadratic_linesearch(grad_f, curvature_f),
                     source=phi, kind="pgm", params={"L": L})


def ppm(phi: SmoothFunction, L: float, feasible_set) -> DcProblem:
    """DCA on this split is the proximal point method."""
    L = _positive("L", L)

    def eval_f(x):
        return phi.value(x) + 0.5 * L * sq_norm(x)

    def grad_f(x):
        return phi.grad(x) + L * np.asarray(x)

    def eval_g(x):
        return 0.5 * L * sq_norm(x)

    def subgrad_g(x):
        return L * np.asarray(x)

    curvature_f = None
    if phi.curvature is not None:
        def curvature_f(d):
            return phi.curvature(d) + L * sq_norm(d)

    L_phi = phi.smoothness if phi.smoothness is not None else L
    return DcProblem(eval_f=eval_f, grad_f=grad_f, eval_g=eval_g, subgrad_g=subgrad_g,
                     smoothness_f=L_phi + L, set=feasible_set, curvature_f=curvature_f,
                     source=phi, kind="ppm", params={"L": L})


def weakly_convex_pgm(phi_value, neg_phi_subgrad, omega: float, feasible_set) -> DcProblem:
    """Split for ``phi`` whose negative is ``omega``-weakly convex.

    ``neg_phi_subgrad(x)`` must return a subgradient of the convex function
    ``-phi + omega/2 ||x||^2`` minus ``omega x``, i.e. a subgradient of ``-phi``.
    """
    omega = _positive("omega", omega)

    def grad_f(x):
        return omega * np.asarray(x)

    def curvature_f(d):
        return omega * sq_norm(d)

    return DcProblem(
        eval_f=lambda x: 0.5 * omega * sq_norm(x),
        grad_f=grad_f,
        eval_g=lambda x: 0.5 * omega * sq_norm(x) - float(phi_value(x)),
        subgrad_g=lambda x: omega * np.asarray(x) + neg_phi_subgrad(x),
        smoothness_f=omega, set=feasible_set, strong_convexity_f=omega,
        curvature_f=curvature_f, exact_linesearch=quadratic_linesearch(grad_f, curvature_f),
        kind="weakly_convex_pgm", params={"omega": omega},
    )


def composite_pgm(p: SmoothFunction, q_value, q_subgrad, omega: float, feasible_set) -> DcProblem:
    """``phi = p - q`` with ``p`` omega-smooth and ``q`` convex."""
    omega = _positive("omega", omega)

    def grad_f(x):
        return omega * np.asarray(x)

    def curvature_f(d):
        return omega * sq_norm(d)

    return DcProblem(
        eval_f=lambda x: 0.5 * omega * sq_norm(x),
        grad_f=grad_f,
        eval_g=lambda x: 0.5 * omega * sq_norm(x) - p.value(x) + float(q_value(x)),
        subgrad_g=lambda x: omega * np.asarray(x) - p.grad(x) + q_subgrad(x),
        smoothness_f=omega, set=feasible_set, strong_convexity_f=omega,
        curvature_f=curvature_f, exact_linesearch=quadratic_linesearch(grad_f, curvature_f),
        source=p, kind="composite_pgm", params={"omega": omega},
    )


def composite_ppm(p: SmoothFunction, q_value, q_subgrad, omega: float, feasible_set) -> DcProblem:
    """``phi = p - q``; here ``f = p + omega/2 ||x||^2`` is ``2 omega``-smooth."""
    omega = _positive("omega", omega)
    curvature_f = None
    if p.curvature is not None:
        def curvature_f(d):
            return p.curvature(d) + omega * sq_norm(d)

    def grad_f(x):
        return p.grad(x) + omega * np.asarray(x)

    return DcProblem(
        eval_f=lambda x: p.value(x) + 0.5 * omega * sq_norm(x),
        grad_f=grad_f,
        eval_g=lambda x: 0.5 * omega * sq_norm(x) + float(q_value(x)),
        subgrad_g=lambda x: omega * np.asarray(x) + q_subgrad(x),
        smoothness_f=2.0 * omega, set=feasible_set, curvature_f=curvature_f,
        source=p, kind="composite_ppm", params={"omega": omega},
    )


# --- quadratic assignment -------------------------------------------------


def qap_value(A, B, X) -> float:
    """``<A^T X, X B>``."""
    return inner_product(A.T @ X, X @ B)


def qap_grad(A, B, X) -> np.ndarray:
    return A.T @ X @ B.T + A @ X @ B


def qap_smoothness(A, B) -> float:
    """``2 ||A||_2 ||B||_2``, which bounds the Hessian of ``<A^T X, X B>``."""
    bound = 2.0 * np.linalg.norm(A, 2) * np.linalg.norm(B, 2)
    return float(bound) if bound > 0 else 1.0


def qap_phi(A, B) -> SmoothFunction:
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    return SmoothFunction(lambda X: qap_value(A, B, X), lambda X: qap_grad(A, B, X),
                          smoothness=qap_smoothness(A, B),
                          curvature=lambda D: 2.0 * inner_product(A.T @ D, D @ B),
                          name="qap")


def qap_linesearch(variant: int, A, B, X, D, u, L: float | None = None) -> float:
    """Closed-form exact step for the QAP surrogates, clipped to [0, 1].

    ``u`` is the gradient of ``g`` frozen at the outer iterate, ``X`` the
    current inner iterate and ``D = S - X``. Falls back to a bounded scalar
    search when the denominator vanishes or (variant 3) is negative.
    """
    if not np.any(D):
        return 0.0
    if variant == 1:
        Q = A.T @ D + D @ B
        P = A.T @ X + X @ B
        num = 2.0 * inner_product(u, D) - inner_product(Q, P)
        den = sq_norm(Q)
    elif variant == 2:
        num = inner_product(u, D) - L * inner_product(D, X)
        den = L * sq_norm(D)
    elif variant == 3:
        num = inner_product(u, D) - inner_product(D, A.T @ X @ B.T + A @ X @ B + L * X)
        den = 2.0 * inner_product(A.T @ D, D @ B) + L * sq_norm(D)
    else:
        raise ValueError(f"unknown QAP variant {variant}")
    if den > 0:
        return float(min(max(num / den, 0.0), 1.0))
    if variant == 3 and den < 0:
        log.warning("variant-3 line search is nonconvex along D; using numerical search")
    surrogate = _qap_surrogate(variant, A, B, u, L)
    return golden_linesearch(lambda eta: surrogate(X + eta * D))


def _qap_surrogate(variant, A, B, u, L):
    if variant == 1:
        return lambda Z: 0.25 * sq_norm(A.T @ Z + Z @ B) - inner_product(u, Z)
    if variant == 2:
        return lambda Z: 0.5 * L * sq_norm(Z) - inner_product(u, Z)
    return lambda Z: qap_value(A, B, Z) + 0.5 * L * sq_norm(Z) - inner_product(u, Z)


def qap_v1(A, B, feasible_set) -> DcProblem:
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)

    def eval_f(X):
        return 0.25 * sq_norm(A.T @ X + X @ B)

    def grad_f(X):
        P = A.T @ X + X @ B
        return 0.5 * (A @ P + P @ B.T)

    def eval_g(X):
        return 0.25 * sq_norm(A.T @ X - X @ B)

    def subgrad_g(X):
        M = A.T @ X - X @ B
        return 0.5 * (A @ M - M @ B.T)

    L_f = 0.5 * (np.linalg.norm(A, 2) + np.linalg.norm(B, 2)) ** 2
    return DcProblem(eval_f=eval_f, grad_f=grad_f, eval_g=eval_g, subgrad_g=subgrad_g,
                     smoothness_f=max(float(L_f), 1e-12), set=feasible_set,
                     curvature_f=lambda D: 0.5 * sq_norm(A.T @ D + D @ B),
                     exact_linesearch=lambda X, D, u: qap_linesearch(1, A, B, X, D, u),
                     kind="qap_v1", params={"A": A, "B": B})


def qap_v2(A, B, feasible_set, L: float | None = None) -> DcProblem:
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    L = _positive("L", L if L is not None else qap_smoothness(A, B))
    base = pgm(qap_phi(A, B), L, feasible_set)
    return DcProblem(eval_f=base.eval_f, grad_f=base.grad_f, eval_g=base.eval_g,
                     subgrad_g=base.subgrad_g, smoothness_f=L, set=feasible_set,
                     strong_convexity_f=L, curvature_f=base.curvature_f,
                     exact_linesearch=lambda X, D, u: qap_linesearch(2, A, B, X, D, u, L),
                     source=base.source, kind="qap_v2", params={"A": A, "B": B, "L": L})


def qap_v3(A, B, feasible_set, L: float | None = None) -> DcProblem:
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    L = _positive("L", L if L is not None else qap_smoothness(A, B))
    base = ppm(qap_phi(A, B), L, feasible_set)
    return DcProblem(eval_f=base.eval_f, grad_f=base.grad_f, eval_g=base.eval_g,
                     subgrad_g=base.subgrad_g, smoothness_f=base.smoothness_f, set=feasible_set,
                     curvature_f=base.curvature_f,
                     exact_linesearch=lambda X, D, u: qap_linesearch(3, A, B, X, D, u, L),
                     source=base.source, kind="qap_v3", params={"A": A, "B": B, "L": L})


def qap_direct(A, B, feasible_set) -> DcProblem:
    """``f = <A^T X, X B>`` with ``g = 0``; convex only for special ``A, B``.

    Used to evaluate ``phi`` directly, not as a solver input in general.
    """
    phi = qap_phi(A, B)
    return DcProblem(eval_f=phi.value, grad_f=phi.grad, eval_g=lambda X: 0.0,
                     subgrad_g=lambda X: np.zeros_like(X), smoothness_f=phi.smoothness,
                     set=feasible_set, source=phi, kind="direct", params={"A": A, "B": B})


# --- dispatch by name --------------------------------------------------------

_BUILDERS = {
    "direct": direct,
    "pgm": pgm,
    "ppm": ppm,
    "weakly_convex_pgm": weakly_convex_pgm,
    "composite_pgm": composite_pgm,
    "composite_ppm": composite_ppm,
    "qap_v1": qap_v1,
    "qap_v2": qap_v2,
    "qap_v3": qap_v3,
    "qap_direct": qap_direct,
}


@dataclass(frozen=True)
class DecompositionSpec:
    """Named decomposition plus the keyword arguments of its constructor."""

    kind: str
    args: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in _BUILDERS:
            raise ValueError(f"unknown decomposition {self.kind!r}; "
                             f"choose from {sorted(_BUILDERS)}")


def build(decomposition: DecompositionSpec) -> DcProblem:
    return _BUILDERS[decomposition.kind](**decomposition.args)
