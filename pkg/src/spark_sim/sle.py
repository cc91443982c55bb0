"""Jacobi solver over a square subsystem of the constraint rows.

The solver treats the selected rows as equalities and iterates
``next[j] = (rhs_j - sum_{k != j} M[j][k] * cur[k]) / M[j][j]`` with true
double buffering: the next vector is computed from the current one only, so
the per-variable update order cannot change the result.  Rows not selected
into the square system are returned for verification by the caller.

Two execution modes share the algorithm: a float reference mode, and an
array-backed mode where every row MAC goes through the bit-serial array
model (exact), division optionally through the approximate divider, values
quantized to a fixed-point grid, and all events charged to a ledger.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from . import pim
from .cost import Ledger
from .divider import DivConfig, approx_divide
from .problem import IlpProblem

DIVERGENCE_LIMIT = 1e15


class NoDiagonalError(Exception):
    """Some free variable has no usable non-zero pivot row."""

    def __init__(self, var: int):
        super().__init__(f"no constraint row can serve as the diagonal for x{var}")
        self.var = var


@dataclass(frozen=True)
class SquareSystem:
    free_vars: tuple[int, ...]            # original variable indices, system order
    row_for: tuple[int, ...]              # constraint index backing each position
    matrix: tuple[tuple[int, ...], ...]   # reduced rows over free_vars
    rhs: tuple[Fraction, ...]             # rhs with fixed contributions folded in
    verify_rows: tuple[int, ...]          # constraints left for verification
    fixed: tuple[tuple[int, Fraction], ...] = ()

    @property
    def size(self) -> int:
        return len(self.free_vars)

    def diagonally_dominant(self) -> bool:
        return all(abs(row[i]) > sum(abs(c) for k, c in enumerate(row) if k != i)
                   for i, row in enumerate(self.matrix))


def select_square_system(problem: IlpProblem,
                         fixed: dict[int, Fraction] | None = None) -> SquareSystem:
    """Assign one constraint row per free variable.

    Greedy, preferring the row with the best dominance margin on the free
    columns (pivot magnitude minus the other free-column magnitudes), then
    the largest pivot, then the lowest row index.  Raw pivot size alone
    happily picks a big coefficient in a dense row over a clean unit-bound
    row and hands the iteration a divergent system.  Falls back to
    augmenting-path reassignment when greedy is blocked; raises
    :class:`NoDiagonalError` only when no assignment exists at all.
    """
    fixed = dict(fixed or {})
    free = [j for j in range(problem.n) if j not in fixed]
    free_set = set(free)
    rows = [con.coeffs for con in problem.constraints]

    def margin(r: int, var: int) -> int:
        pivot = abs(rows[r][var])
        rest = sum(abs(c) for k, c in enumerate(rows[r])
                   if k != var and k in free_set)
        return pivot - rest

    assign: dict[int, int] = {}   # var -> row
    taken: dict[int, int] = {}    # row -> var
    for var in free:
        candidates = sorted(
            (r for r in range(problem.m) if rows[r][var] != 0),
            key=lambda r: (-margin(r, var), -abs(rows[r][var]), r))
        picked = None
        for r in candidates:
            if r not in taken:
                picked = r
                break
        if picked is None:
            picked = _augment(var, rows, free, assign, taken)
            if picked is None:
                raise NoDiagonalError(var)
            continue  # _augment updated the maps
        assign[var] = picked
        taken[picked] = var

    order = tuple(free)
    row_for = tuple(assign[v] for v in order)
    matrix = tuple(tuple(rows[assign[v]][k] for k in order) for v in order)
    rhs = tuple(
        Fraction(problem.constraints[assign[v]].rhs)
        - sum((Fraction(rows[assign[v]][k]) * fixed[k] for k in fixed),
              start=Fraction(0))
        for v in order)
    verify = tuple(r for r in range(problem.m) if r not in taken)
    return SquareSystem(order, row_for, matrix, rhs, verify,
                        tuple(sorted((k, Fraction(v)) for k, v in fixed.items())))


def _augment(var: int, rows, free, assign: dict[int, int],
             taken: dict[int, int]) -> int | None:
    """Breadth-first augmenting path; returns a row for ``var`` or None."""
    parent: dict[int, tuple[int, int | None]] = {}
    frontier = [var]
    seen_rows: set[int] = set()
    while frontier:
        v = frontier.pop(0)
        for r in sorted(range(len(rows)), key=lambda r: (-abs(rows[r][v]), r)):
            if rows[r][v] == 0 or r in seen_rows:
                continue
            seen_rows.add(r)
            if r not in taken:
                # unwind: give r to v, cascade reassignments
                while True:
                    assign[v] = r
                    taken[r] = v
                    if v == var:
                        return r
                    v, r = parent[v]
                    # type narrowing: r is not None along the path
            else:
                owner = taken[r]
                if owner not in parent and owner != var:
                    parent[owner] = (v, r)
                    frontier.append(owner)
    return None


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class JacobiState:
    current: tuple[float, ...]   # read side for this iteration
    pending: tuple[float, ...]   # values written this iteration
    iteration: int = 0
    l1: float = float("inf")


@dataclass(frozen=True)
class PimContext:
    """Array-backed execution settings; pulls event accounting along."""
    geometry: pim.CacheGeometry
    ledger: Ledger | None = None
    div: DivConfig | None = None    # None = exact division
    frac_bits: int = 8
    acc_width: int = 32             # accumulator width; beyond it -> overflow

    @property
    def scale(self) -> int:
        return 1 << self.frac_bits


class PimOverflowError(Exception):
    pass


def jacobi_step(state: JacobiState, system: SquareSystem) -> JacobiState:
    """One reference-mode iteration (floats, exact update rule)."""
    cur = state.current
    nxt = []
    for j, row in enumerate(system.matrix):
        acc = sum(row[k] * cur[k] for k in range(len(cur)) if k != j)
        nxt.append((float(system.rhs[j]) - acc) / row[j])
    l1 = sum(abs(a - b) for a, b in zip(nxt, cur))
    return JacobiState(tuple(cur), tuple(nxt), state.iteration + 1, l1)


def jacobi_step_pim(state: JacobiState, system: SquareSystem,
                    ctx: PimContext) -> JacobiState:
    """One array-backed iteration on the fixed-point grid.

    ``state`` vectors hold grid numerators (ints).  Each row MAC runs
    through the bit-serial model and is exact; the divide optionally goes
    through the approximate divider; the quotient is re-quantized to the
    grid.  Charges per-row events: one MAC batch, one subtract, one divide,
    reads of every operand plus the result write; then the norm pass.
    """
    scale = ctx.scale
    cur = [int(v) for v in state.current]
    nxt: list[int] = []
    n = system.size
    limit = 1 << (ctx.acc_width - 1)
    for j, row in enumerate(system.matrix):
        masked = [cur[k] if k != j else 0 for k in range(n)]
        acc, events = pim.mac_vector(row, masked, ctx.geometry)
        if ctx.ledger is not None:
            ctx.ledger.charge_mac(events)
            ctx.ledger.charge_alu("queue_rw", n + 1)
            ctx.ledger.charge_alu("sub_op", 1)
            ctx.ledger.charge_div(1)
        num = round(system.rhs[j] * scale) - acc
        if not -limit < num < limit:
            raise PimOverflowError(f"accumulator overflow at row {j}")
        if ctx.div is None:
            quotient = num / row[j]
        else:
            quotient = approx_divide(float(num), float(row[j]), ctx.div)
        q = round(quotient)
        if not -limit < q < limit:
            raise PimOverflowError(f"value overflow at row {j}")
        nxt.append(int(q))
    l1 = sum(abs(a - b) for a, b in zip(nxt, cur))
    if ctx.ledger is not None:
        ctx.ledger.charge_alu("sub_op", 2 * n - 1)
        ctx.ledger.charge_alu("queue_rw", 2 * n)
    return JacobiState(tuple(cur), tuple(nxt), state.iteration + 1, float(l1))


@dataclass(frozen=True)
class SleResult:
    converged: bool
    x: tuple[Fraction, ...]        # free-variable values, system order
    iterations: int
    l1: float
    flags: tuple[str, ...] = ()


def solve_sle(system: SquareSystem, epsilon: float = 1e-6,
              max_iters: int = 100_000,
              ctx: PimContext | None = None,
              warn_nondominant: bool = False) -> SleResult:
    """Iterate to the convergence threshold or give up.

    The pending vector is promoted to current by queue swap at the end of
    every iteration; on convergence the pending values are the answer.
    """
    flags: list[str] = []
    if warn_nondominant and not system.diagonally_dominant():
        flags.append("not_diagonally_dominant")
    if system.size == 0:
        return SleResult(True, (), 0, 0.0, tuple(flags))

    if ctx is None:
        state = JacobiState(tuple(0.0 for _ in range(system.size)), ())
        for _ in range(max_iters):
            state = jacobi_step(state, system)
            if state.l1 < epsilon:
                return SleResult(True,
                                 tuple(Fraction(v) for v in state.pending),
                                 state.iteration, state.l1, tuple(flags))
            if state.l1 > DIVERGENCE_LIMIT:
                flags.append("diverged")
                break
            state = replace(state, current=state.pending)
        return SleResult(False, tuple(Fraction(v) for v in state.pending),
                         state.iteration, state.l1, tuple(flags))

    # fixed-point grid mode: compare the norm in grid units
    scale = ctx.scale
    eps_units = max(1, round(epsilon * scale))
    state = JacobiState(tuple(0 for _ in range(system.size)), ())
    seen: set[tuple] = set()
    best_pending: tuple | None = None
    best_l1 = float("inf")
    for _ in range(max_iters):
        revisit = state.current in seen
        seen.add(state.current)
        try:
            state = jacobi_step_pim(state, system, ctx)
        except PimOverflowError:
            flags.append("overflow")
            return SleResult(False, tuple(Fraction(int(v), scale)
                                          for v in state.current),
                             state.iteration, state.l1, tuple(flags))
        if state.l1 < best_l1:
            best_l1, best_pending = state.l1, state.pending
        if state.l1 < eps_units:
            return SleResult(True, tuple(Fraction(int(v), scale)
                                         for v in state.pending),
                             state.iteration, state.l1 / scale, tuple(flags))
        if revisit:
            # the quantized update is a map on a finite lattice, so the
            # trajectory is periodic; a tight orbit is the fixed point at
            # grid resolution, anything wider is a real failure
            if best_l1 <= 4 * system.size * eps_units:
                flags.append("grid_limit_cycle")
                return SleResult(True, tuple(Fraction(int(v), scale)
                                             for v in best_pending),
                                 state.iteration, best_l1 / scale, tuple(flags))
            flags.append("oscillating")
            break
        state = replace(state, current=state.pending)
    return SleResult(False, tuple(Fraction(int(v), scale) for v in state.pending),
                     state.iteration, state.l1 / scale, tuple(flags))
