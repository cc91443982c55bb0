"""Executable model of a near-cache ILP/LP accelerator.

The solver stack routes each instance by a hardware-style sparsity check:
cardinality-bounded instances go to a candidate-enumeration path, dense
ones to an iterative square-system solve plus branch and bound, while a
bit-accurate array model and an event ledger account the cycles and energy
of the modeled datapath.
"""

from .problem import (Constraint, IlpProblem, ProblemError, Sense, Solution,
                      Status, check_feasibility, evaluate_objective,
                      normalize, parse_problem)
from .fc import SparsityPartition, detect_sparsity
from .driver import SimConfig, SimReport, run, run_matrix

__all__ = [
    "Constraint", "IlpProblem", "ProblemError", "Sense", "Solution", "Status",
    "check_feasibility", "evaluate_objective", "normalize", "parse_problem",
    "SparsityPartition", "detect_sparsity",
    "SimConfig", "SimReport", "run", "run_matrix",
]

__version__ = "0.1.0"
