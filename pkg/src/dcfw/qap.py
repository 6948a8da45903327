"""Quadratic assignment: QAPLIB I/O, initialization, relax-and-round, assignment error.

The relaxation minimizes ``phi(X) = <A^T X, X B>`` over doubly stochastic
``X``. For a permutation matrix with ``X[i, p[i]] = 1`` this equals
``sum_ij a_ij b_{p(j) p(i)}``, while QAPLIB scores a permutation as
``sum_ij a_ij b_{p(i) p(j)}``. The two agree when ``A`` or ``B`` is symmetric;
:func:`qaplib_objective` computes the QAPLIB value for comparisons against
best-known solutions.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .baselines import fw_nonconvex
from .decompositions import qap_phi, qap_v1, qap_v2, qap_v3
from .lap import Assignment, round_to_permutation
from .oracles import Birkhoff, alternating_projections
from .solver import DcfwConfig, DcfwResult, dcfw_solve


class QaplibFormatError(ValueError):
    pass


@dataclass(frozen=True)
class QapInstance:
    n: int
    A: np.ndarray
    B: np.ndarray
    best_known: Optional[float] = None
    name: str = ""

    def __post_init__(self):
        A = np.asarray(self.A, dtype=np.float64)
        B = np.asarray(self.B, dtype=np.float64)
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if A.shape != (self.n, self.n) or B.shape != (self.n, self.n):
            raise ValueError(f"A and B must be {self.n}x{self.n}, got {A.shape} and {B.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    def __eq__(self, other):
        if not isinstance(other, QapInstance):
            return NotImplemented
        return (self.n == other.n and np.array_equal(self.A, other.A)
                and np.array_equal(self.B, other.B))

    __hash__ = None


_TOKEN = re.compile(r"\S+")


def _tokens(text: str):
    return [(m.group(), m.start()) for m in _TOKEN.finditer(text)]


def _number(tok, offset, index):
    try:
        return float(tok)
    except ValueError:
        raise QaplibFormatError(
            f"non-numeric token {tok!r} at offset {offset} (token {index})") from None


def parse_qaplib(text: str, name: str = "") -> QapInstance:
    """Parse ``n`` followed by ``A`` and ``B`` row-major, whitespace separated."""
    toks = _tokens(text)
    if not toks:
        raise QaplibFormatError("empty input: expected the dimension n")
    head, off = toks[0]
    n_val = _number(head, off, 0)
    if n_val != int(n_val) or n_val < 2:
        raise QaplibFormatError(f"dimension must be an integer >= 2, got {head!r} at offset {off}")
    n = int(n_val)
    expected = 1 + 2 * n * n
    if len(toks) != expected:
        raise QaplibFormatError(
            f"expected {expected} tokens for n={n} (1 + 2n^2), found {len(toks)}")
    vals = np.array([_number(t, o, i) for i, (t, o) in enumerate(toks[1:], start=1)])
    A = vals[: n * n].reshape(n, n)
    B = vals[n * n:].reshape(n, n)
    return QapInstance(n=n, A=A, B=B, name=name)


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() and abs(v) < 2**53 else repr(float(v))


def format_qaplib(instance: QapInstance) -> str:
    lines = [str(instance.n), ""]
    lines += [" ".join(_fmt(v) for v in row) for row in instance.A]
    lines.append("")
    lines += [" ".join(_fmt(v) for v in row) for row in instance.B]
    return "\n".join(lines) + "\n"


def read_instance(path, best_known: Optional[float] = None) -> QapInstance:
    """Read a ``.dat`` file; picks up a sibling ``.sln`` for the best-known value."""
    from pathlib import Path

    path = Path(path)
    inst = parse_qaplib(path.read_text(), name=path.stem)
    if best_known is None:
        sln = path.with_suffix(".sln")
        if sln.exists():
            best_known = parse_solution(sln.read_text())[1]
    if best_known is not None:
        inst = QapInstance(inst.n, inst.A, inst.B, best_known=float(best_known), name=inst.name)
    return inst


def parse_solution(text: str):
    """QAPLIB ``.sln``: ``n value`` then the 1-based permutation. Returns ``(n, value, perm)``."""
    toks = _tokens(text)
    if len(toks) < 2:
        raise QaplibFormatError("solution file needs at least n and the objective value")
    n = int(_number(*toks[0], 0))
    value = _number(*toks[1], 1)
    perm = None
    if len(toks) >= 2 + n:
        perm = np.array([int(_number(t, o, i)) - 1
                         for i, (t, o) in enumerate(toks[2:2 + n], start=2)])
    return n, value, perm


# --- objective and exact reference --------------------------------------------


def relaxed_objective(instance: QapInstance, X) -> float:
    return qap_phi(instance.A, instance.B).value(np.asarray(X, dtype=np.float64))


def qaplib_objective(instance: QapInstance, perm) -> float:
    """``sum_ij a_ij b_{p(i) p(j)}``."""
    perm = np.asarray(perm, dtype=int)
    return float(np.sum(instance.A * instance.B[np.ix_(perm, perm)]))


def brute_force(instance: QapInstance, objective: str = "relaxed"):
    """Exact optimum over all ``n!`` permutations (small ``n`` only).

    ``objective`` is ``"relaxed"`` (``phi`` at permutation matrices) or
    ``"qaplib"``. Returns ``(perm, value)``.
    """
    if instance.n > 9:
        raise ValueError("brute force is limited to n <= 9")
    B = instance.B if objective == "qaplib" else instance.B.T
    best_perm, best_val = None, math.inf
    for p in itertools.permutations(range(instance.n)):
        p = np.array(p)
        val = float(np.sum(instance.A * B[np.ix_(p, p)]))
        if val < best_val:
            best_perm, best_val = p, val
    return best_perm, best_val


def assignment_error(phi_rounded: float, phi_best: float) -> float:
    """``(phi_rounded - phi_best) / max(phi_best, 1)``."""
    if not np.isfinite(phi_best):
        raise ValueError("phi_best must be finite")
    return (phi_rounded - phi_best) / max(phi_best, 1.0)


# --- pipeline -----------------------------------------------------------------


def init_point(n: int, seed: int, sweeps: int = 1000) -> np.ndarray:
    """``ones / n`` plus standard Gaussian noise, made doubly stochastic by alternating projections."""
    if n < 2:
        raise ValueError("n must be >= 2")
    rng = np.random.default_rng(seed)
    x = np.full((n, n), 1.0 / n) + rng.standard_normal((n, n))
    return alternating_projections(x, sweeps)


def synthetic_instance(n: int, seed: int, high: int = 10) -> QapInstance:
    """Symmetric integer distance and flow matrices with zero diagonals."""
    rng = np.random.default_rng(seed)
    pts = rng.integers(0, high, size=(n, 2))
    A = np.abs(pts[:, None, :] - pts[None, :, :]).sum(axis=2).astype(float)
    F = rng.integers(0, high, size=(n, n))
    B = np.triu(F, 1)
    B = (B + B.T).astype(float)
    return QapInstance(n=n, A=A, B=B, name=f"synth{n}s{seed}")


def make_problem(instance: QapInstance, variant: int, feasible_set=None):
    feasible_set = feasible_set if feasible_set is not None else Birkhoff(instance.n)
    builders = {1: qap_v1, 2: qap_v2, 3: qap_v3}
    if variant not in builders:
        raise ValueError(f"variant must be 1, 2 or 3, got {variant}")
    return builders[variant](instance.A, instance.B, feasible_set)


@dataclass
class RoundResult:
    assignment: Assignment
    phi_rounded: float
    phi_relaxed: float
    result: DcfwResult
    solver: str
    variant: Optional[int] = None
    extras: dict = field(default_factory=dict)

    @property
    def trace(self):
        return self.result.trace


def relax_and_round(instance: QapInstance, solver: str = "dcfw", variant: int = 1,
                    config: DcfwConfig = DcfwConfig(), x0=None, seed: int = 0,
                    fw_max_iter: int = 100_000) -> RoundResult:
    """Solve the relaxation with ``"fw"`` or ``"dcfw"``, then round to a permutation.

    Both solvers share the termination rule, step rule and LMO budget of
    ``config``; ``fw_max_iter`` caps the FW baseline's iterations.
    """
    x0 = init_point(instance.n, seed) if x0 is None else np.asarray(x0, dtype=np.float64)
    feasible_set = Birkhoff(instance.n)
    if solver == "fw":
        phi = qap_phi(instance.A, instance.B)
        res = fw_nonconvex(phi, feasible_set, x0, max_iter=fw_max_iter,
                           rule=config.rule, rel_tol=config.rel_tol,
                           eps_final=config.eps_final, max_lmo_calls=config.max_lmo_calls)
        variant = None
    elif solver == "dcfw":
        res = dcfw_solve(make_problem(instance, variant, feasible_set), x0, config)
    else:
        raise ValueError(f"unknown solver {solver!r}; choose 'fw' or 'dcfw'")
    assignment = round_to_permutation(res.x_final)
    return RoundResult(
        assignment=assignment,
        phi_rounded=relaxed_objective(instance, assignment.matrix()),
        phi_relaxed=relaxed_objective(instance, res.x_final),
        result=res,
        solver=solver,
        variant=variant,
    )


def is_permutation_matrix(P) -> bool:
    P = np.asarray(P)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        return False
    if not np.all((P == 0) | (P == 1)):
        return False
    return bool(np.all(P.sum(axis=0) == 1) and np.all(P.sum(axis=1) == 1))

