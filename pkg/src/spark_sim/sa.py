"""Sparsity-aware solve path.

When every variable carries a cardinality bound, candidate solutions are
read off the geometry of the bound box and the general constraint planes:
the box corner itself, plus, for every (general row, variable) pair, the
corner with that one variable re-derived from the row treated as an
equality.  Each candidate is verified against the full constraint set and
priced; the best feasible one wins.  This is a fast path, not a
completeness argument: callers fall back to the dense solver when nothing
survives verification.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import pim
from .cost import Ledger
from .fc import SparsityPartition
from .problem import IlpProblem, Sense, Solution, Status, check_feasibility, \
    evaluate_objective


@dataclass(frozen=True)
class PsEntry:
    x: tuple[Fraction, ...]
    source: tuple[int, int] | None   # (general row, substituted var); None = corner
    feasible: bool                   # nonnegativity screen at derivation time


@dataclass(frozen=True)
class PcEntry:
    ps_index: int
    cost: Fraction


@dataclass(frozen=True)
class SaOutcome:
    candidates: tuple[PsEntry, ...]
    costs: tuple[PcEntry, ...]       # verified-feasible candidates only
    solution: Solution


def pot_soln(partition: SparsityPartition, problem: IlpProblem,
             ledger: Ledger | None = None,
             geometry: pim.CacheGeometry | None = None) -> list[PsEntry]:
    """Enumerate candidate vectors from the bound box and general rows."""
    if not partition.is_sparse:
        raise ValueError("sparsity-aware path requires a sparse verdict")
    bounds = [partition.bound_of(j) for j in range(problem.n)]
    entries = [PsEntry(tuple(bounds), None, all(b >= 0 for b in bounds))]
    geom = geometry or pim.CacheGeometry()
    for i in partition.general:
        row = problem.constraints[i]
        for k, coeff in enumerate(row.coeffs):
            if coeff == 0:
                continue
            if ledger is not None:
                # dot product of the row with the bound vector, k masked
                masked = [int(b) if j != k else 0
                          for j, b in enumerate(bounds)]
                _, events = pim.mac_vector(row.coeffs, masked, geom)
                ledger.charge_mac(events)
                ledger.charge_alu("sub_op", 1)
                ledger.charge_div(1)
                ledger.charge_alu("queue_rw", problem.n + 1)
            rest = sum((Fraction(c) * bounds[j]
                        for j, c in enumerate(row.coeffs) if j != k),
                       start=Fraction(0))
            value = (Fraction(row.rhs) - rest) / coeff
            if problem.integral:
                value = Fraction(value.numerator // value.denominator)
            x = tuple(value if j == k else bounds[j] for j in range(problem.n))
            entries.append(PsEntry(x, (i, k), value >= 0))
    return entries


def pot_costs(candidates: list[PsEntry], problem: IlpProblem,
              ledger: Ledger | None = None,
              geometry: pim.CacheGeometry | None = None
              ) -> tuple[list[PcEntry], Solution]:
    """Verify candidates against every constraint and pick the optimum."""
    geom = geometry or pim.CacheGeometry()
    priced: list[PcEntry] = []
    for idx, entry in enumerate(candidates):
        if not entry.feasible:
            continue
        if ledger is not None:
            # full verification is near-memory compare traffic
            for con in problem.constraints:
                nnz = sum(1 for c in con.coeffs if c != 0)
                ledger.charge_alu("queue_rw", nnz + 1)
                ledger.charge_alu("sub_op", 1)
        if not check_feasibility(problem, entry.x).feasible:
            continue
        if ledger is not None:
            masked = [int(v) for v in entry.x] if all(
                v.denominator == 1 for v in entry.x) else None
            if masked is not None:
                _, events = pim.mac_vector(problem.cost, masked, geom)
                ledger.charge_mac(events)
            ledger.charge_alu("queue_rw", 2)
        priced.append(PcEntry(idx, evaluate_objective(problem, entry.x)))
    if not priced:
        return [], Solution(Status.NO_CANDIDATE)
    if ledger is not None:
        ledger.charge_alu("sub_op", max(len(priced) - 1, 0))
        ledger.charge_alu("queue_rw", len(priced))
    maximize = problem.sense is Sense.MAX
    best = max(priced, key=lambda e: e.cost) if maximize \
        else min(priced, key=lambda e: e.cost)
    winner = candidates[best.ps_index]
    return priced, Solution(Status.OPTIMAL, winner.x, best.cost)


def solve_sparse(partition: SparsityPartition, problem: IlpProblem,
                 ledger: Ledger | None = None,
                 geometry: pim.CacheGeometry | None = None) -> SaOutcome:
    candidates = pot_soln(partition, problem, ledger, geometry)
    costs, solution = pot_costs(candidates, problem, ledger, geometry)
    return SaOutcome(tuple(candidates), tuple(costs), solution)
