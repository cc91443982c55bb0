"""Fetch/control stage: near-memory non-zero counting and sparsity routing.

Constraints are split into two arrays: single-variable upper bounds
(cardinality constraints, ``c * x_j <= d`` with ``c > 0``) and general
multi-variable rows.  A problem is routed to the sparsity-aware solver only
when the cardinality array covers every variable exactly once and all
remaining rows are general.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .problem import IlpProblem


class RowKind(Enum):
    CARDINALITY = "cardinality"
    GENERAL = "general"
    VACUOUS = "vacuous"
    INFEASIBLE = "infeasible"


class InfeasibleRowError(Exception):
    """A row that no nonnegative assignment can satisfy."""

    def __init__(self, row_index: int):
        super().__init__(f"constraint {row_index} cannot be satisfied with x >= 0")
        self.row_index = row_index


@dataclass(frozen=True)
class CardinalityEntry:
    var: int
    bound: Fraction  # integer-valued for integral problems (floored)


@dataclass(frozen=True)
class SparsityPartition:
    cc: tuple[CardinalityEntry, ...]      # one entry per covered variable
    general: tuple[int, ...]              # constraint indices
    nnz: tuple[int, ...]                  # per-constraint non-zero counts
    vacuous: tuple[int, ...]              # dropped all-zero rows
    is_sparse: bool

    def bound_of(self, var: int) -> Fraction:
        for e in self.cc:
            if e.var == var:
                return e.bound
        raise KeyError(var)


def count_nonzeros(row) -> int:
    return sum(1 for c in row if c != 0)


def classify_constraint(row, rhs: int, integral: bool = True):
    """Classify one canonical ``<=`` row.

    Returns ``(RowKind, CardinalityEntry | None)``.  A cardinality row has
    exactly one non-zero coefficient and that coefficient is positive; the
    bound is ``rhs / c``, floored for integral problems.  A single *negative*
    coefficient is a lower bound, not a cardinality cap, so it stays general.
    """
    nz = [(j, c) for j, c in enumerate(row) if c != 0]
    if not nz:
        return (RowKind.VACUOUS, None) if rhs >= 0 else (RowKind.INFEASIBLE, None)
    if len(nz) == 1:
        j, c = nz[0]
        if c > 0:
            bound = Fraction(rhs, c)
            if integral:
                bound = Fraction(bound.numerator // bound.denominator)
            if bound < 0:
                # x_j <= negative conflicts with x_j >= 0
                return RowKind.INFEASIBLE, None
            return RowKind.CARDINALITY, CardinalityEntry(j, bound)
    return RowKind.GENERAL, None


def detect_sparsity(problem: IlpProblem) -> SparsityPartition:
    """Partition rows and decide the execution path.

    Duplicate cardinality rows on an already-covered variable keep the
    tightest bound in the cardinality array; the displaced row is counted as
    a general constraint (it is redundant for candidate enumeration but still
    verified like any other row).  Raises :class:`InfeasibleRowError` when a
    row is unsatisfiable outright.
    """
    cc: dict[int, tuple[Fraction, int]] = {}  # var -> (bound, row index)
    general: list[int] = []
    vacuous: list[int] = []
    nnz: list[int] = []
    for i, con in enumerate(problem.constraints):
        nnz.append(count_nonzeros(con.coeffs))
        kind, entry = classify_constraint(con.coeffs, con.rhs, problem.integral)
        if kind is RowKind.INFEASIBLE:
            raise InfeasibleRowError(i)
        if kind is RowKind.VACUOUS:
            vacuous.append(i)
        elif kind is RowKind.CARDINALITY:
            assert entry is not None
            if entry.var in cc:
                old_bound, old_row = cc[entry.var]
                if entry.bound < old_bound:
                    cc[entry.var] = (entry.bound, i)
                    general.append(old_row)
                else:
                    general.append(i)
            else:
                cc[entry.var] = (entry.bound, i)
        else:
            general.append(i)
    covered = len(cc)
    effective_m = problem.m - len(vacuous)
    is_sparse = covered == problem.n and len(general) == effective_m - problem.n
    entries = tuple(CardinalityEntry(var, bound)
                    for var, (bound, _) in sorted(cc.items()))
    return SparsityPartition(entries, tuple(sorted(general)), tuple(nnz),
                             tuple(vacuous), is_sparse)
