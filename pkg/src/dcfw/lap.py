"""Linear assignment: the Birkhoff LMO and nearest-permutation rounding."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import NonFiniteError


@dataclass(frozen=True)
class Assignment:
    """``perm[i]`` is the column assigned to row ``i``."""

    perm: np.ndarray
    cost: float

    def matrix(self) -> np.ndarray:
        return permutation_matrix(self.perm)


def permutation_matrix(perm) -> np.ndarray:
    perm = np.asarray(perm, dtype=int)
    n = perm.size
    out = np.zeros((n, n))
    out[np.arange(n), perm] = 1.0
    return out


def _check_square(cost) -> np.ndarray:
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1] or cost.shape[0] < 1:
        raise ValueError(f"cost must be a non-empty square matrix, got shape {cost.shape}")
    if not np.all(np.isfinite(cost)):
        raise NonFiniteError("cost matrix contains non-finite entries")
    return cost


def solve_lap(cost) -> Assignment:
    """Minimum-cost perfect assignment of an ``n x n`` cost matrix."""
    cost = _check_square(cost)
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(cost.shape[0], dtype=int)
    perm[rows] = cols
    return Assignment(perm=perm, cost=float(cost[np.arange(cost.shape[0]), perm].sum()))


def round_to_permutation(x) -> Assignment:
    """Permutation matrix nearest to ``x`` in Frobenius norm.

    Maximizing ``<x, P>`` is equivalent since ``||P||_F`` is constant. The
    returned ``cost`` is ``<x, P>``.
    """
    x = _check_square(x)
    res = solve_lap(-x)
    return Assignment(perm=res.perm, cost=-res.cost)
