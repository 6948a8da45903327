"""Projection-free difference-of-convex optimization with Frank-Wolfe inner solves."""

from .core import (
    DcProblem,
    InfeasiblePointError,
    NonFiniteError,
    OracleCounters,
    SmoothFunction,
    SolveTrace,
    TraceRow,
    inner_product,
    phi,
)
from .decompositions import DecompositionSpec, build
from .fw_inner import FwResult, StepRule, SurrogateProblem, fw_solve
from .gaps import GapReport, gap_dc, gap_pgm, gap_ppm
from .lap import Assignment, round_to_permutation, solve_lap
from .oracles import BallL2, Birkhoff, BoxLinf, FeasibleSet, LmoResult, Simplex, SpectralBall
from .solver import DcfwConfig, DcfwResult, dcfw_solve

__version__ = "0.1.0"

__all__ = [
    "Assignment", "BallL2", "Birkhoff", "BoxLinf", "DcProblem", "DcfwConfig", "DcfwResult",
    "DecompositionSpec", "FeasibleSet", "FwResult", "GapReport", "InfeasiblePointError",
    "LmoResult", "NonFiniteError", "OracleCounters", "Simplex", "SmoothFunction", "SolveTrace",
    "SpectralBall", "StepRule", "SurrogateProblem", "TraceRow", "build", "dcfw_solve",
    "fw_solve", "gap_dc", "gap_pgm", "gap_ppm", "inner_product", "phi", "round_to_permutation",
    "solve_lap",
]
