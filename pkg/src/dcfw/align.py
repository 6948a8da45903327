"""Alignment of partially observed embeddings on synthetic data.

Minimize ``(1/2n) ||P * (X E1) - Y||_F^2 - lam ||X||_*`` over ``||X||_2 <= 1``,
where ``P`` masks the observed entries of the target embeddings ``Y``. The
nuclear-norm term rewards singular values near one, i.e. near-orthogonal ``X``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DcProblem, inner_product, sq_norm
from .oracles import SpectralBall


@dataclass(frozen=True)
class AlignProblem:
    E1: np.ndarray
    Y: np.ndarray
    P: np.ndarray
    lam: float

    def __post_init__(self):
        E1 = np.asarray(self.E1, dtype=np.float64)
        Y = np.asarray(self.Y, dtype=np.float64)
        P = np.asarray(self.P, dtype=np.float64)
        if E1.ndim != 2 or Y.shape != E1.shape or P.shape != E1.shape:
            raise ValueError("E1, Y and P must share one d x n shape")
        if not np.all((P == 0) | (P == 1)):
            raise ValueError("mask entries must be 0 or 1")
        if np.any(Y[P == 0] != 0):
            raise ValueError("Y must vanish off the mask")
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        for name, arr in (("E1", E1), ("Y", Y), ("P", P)):
            object.__setattr__(self, name, arr)

    @property
    def d(self) -> int:
        return self.E1.shape[0]

    @property
    def n(self) -> int:
        return self.E1.shape[1]

    def loss(self, X) -> float:
        return 0.5 * sq_norm(self.P * (X @ self.E1) - self.Y) / self.n


def random_orthogonal(d: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def make_synthetic(d: int, n: int, obs_prob: float, noise: float = 0.0, seed: int = 0,
                   lam: float = 1e-4):
    """Gaussian source embeddings, a random orthogonal map and a Bernoulli mask.

    Returns ``(problem, X_true)`` with targets ``X_true E1 + noise * Z``.
    """
    if d < 2 or n < d:
        raise ValueError("need d >= 2 and n >= d")
    if not 0 < obs_prob <= 1:
        raise ValueError("obs_prob must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    E1 = rng.standard_normal((d, n))
    X_true = random_orthogonal(d, rng)
    E2 = X_true @ E1 + noise * rng.standard_normal((d, n))
    P = (rng.random((d, n)) < obs_prob).astype(np.float64)
    return AlignProblem(E1=E1, Y=P * E2, P=P, lam=lam), X_true


def nuclear_subgradient(X, lam: float) -> np.ndarray:
    """``lam U V^T`` from a full SVD; zero at ``X = 0``."""
    if lam == 0 or not np.any(X):
        return np.zeros_like(X)
    u, _, vt = np.linalg.svd(X)
    return lam * (u @ vt)


def align_oracles(problem: AlignProblem, radius: float = 1.0) -> DcProblem:
    """``f`` is the masked quadratic loss, ``g = lam ||X||_*``."""
    E1, Y, P, n, lam = problem.E1, problem.Y, problem.P, problem.n, problem.lam

    def grad_f(X):
        return (P * (X @ E1) - Y) @ E1.T / n

    def eval_g(X):
        return lam * float(np.linalg.svd(X, compute_uv=False).sum()) if lam else 0.0

    def curvature_f(D):
        return sq_norm(P * (D @ E1)) / n

    smoothness = float(np.linalg.norm(E1, 2) ** 2 / n)
    return DcProblem(eval_f=problem.loss, grad_f=grad_f, eval_g=eval_g,
                     subgrad_g=lambda X: nuclear_subgradient(X, lam),
                     smoothness_f=smoothness, set=SpectralBall(problem.d, radius),
                     curvature_f=curvature_f, kind="align", params={"lam": lam})


@dataclass(frozen=True)
class AlignmentQuality:
    relative_error: float
    neighbor_accuracy: float
    degenerate: bool = False


def polar_factor(X):
    """Nearest orthogonal matrix ``U V^T``; ``(identity, True)`` for ``X = 0``."""
    if not np.any(X):
        return np.eye(X.shape[0]), True
    u, _, vt = np.linalg.svd(X)
    return u @ vt, False


def alignment_quality(X, problem: AlignProblem, X_true) -> AlignmentQuality:
    """Relative recovery error and nearest-neighbour accuracy after polar rounding."""
    X = np.asarray(X, dtype=np.float64)
    if not np.all(np.isfinite(X)):
        raise ValueError("X must be finite")
    R, degenerate = polar_factor(X)
    mapped = R @ problem.E1
    target = X_true @ problem.E1
    rel = float(np.linalg.norm(mapped - target) / np.linalg.norm(target))
    # squared distances between every mapped column and every target column
    d2 = (np.sum(mapped**2, axis=0)[:, None] - 2.0 * mapped.T @ target
          + np.sum(target**2, axis=0)[None, :])
    acc = float(np.mean(np.argmin(d2, axis=1) == np.arange(problem.n)))
    return AlignmentQuality(rel, acc, degenerate)


def nuclear_norm(X) -> float:
    return float(np.linalg.svd(X, compute_uv=False).sum())


def subgradient_gap(problem: AlignProblem, X, Z) -> float:
    """``g(Z) - g(X) - <lam U V^T, Z - X>``; nonnegative by convexity."""
    lam = problem.lam
    return lam * nuclear_norm(Z) - lam * nuclear_norm(X) - inner_product(
        nuclear_subgradient(X, lam), Z - X)
