"""Branch and bound over integer ranges, guided by the Jacobi relaxation.

Every node carries one integer interval per variable, accumulated from the
floor/ceil branch constraints on the path from the root.  A node's
relaxation reuses the square-system solver: variables pinned by their
interval are substituted away, the remaining free system is solved, and any
free value that lands outside its interval is fixed at the nearest endpoint
and the reduced system re-solved, so branch rows are never added to the
iterated system itself.  All original and branch constraints are then
checked exactly on the composed point.

Because the equality-system relaxation is guidance rather than a valid
objective bound, fathoming uses interval objective bounds instead:
``sum(cost_j * best_j)`` over each node's ranges (tightened by single-row
propagation) is a true bound on every integer point under the node, so a
claimed optimum really is one.  The relaxation steers branching order,
supplies rounding candidates, and prices nodes for best-first selection.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

from .problem import IlpProblem, Sense, Solution, Status, check_feasibility
from .sle import NoDiagonalError, PimContext, select_square_system, solve_sle

FRAC_TOL = 1e-6
Interval = tuple[int, int | None]  # inclusive lo, hi (None = unbounded)


class BranchDir(Enum):
    FLOOR = "floor"
    CEIL = "ceil"


@dataclass(frozen=True)
class BranchConstraint:
    var: int
    direction: BranchDir
    value: int  # floor: x_var <= value ; ceil: x_var >= value


@dataclass
class BnbNode:
    id: int
    parent: int | None
    depth: int
    branch: BranchConstraint | None
    intervals: tuple[Interval, ...]
    local_bound: int | None = None      # sound objective bound; None = unbounded
    relaxed_x: tuple[float, ...] | None = None
    relaxed_obj: float | None = None
    relax_flags: tuple[str, ...] = ()

    def pinned(self) -> dict[int, int]:
        return {j: lo for j, (lo, hi) in enumerate(self.intervals) if lo == hi}


@dataclass
class BnbStats:
    created: int = 0
    expanded: int = 0
    fathomed_bound: int = 0
    fathomed_infeasible: int = 0
    fathomed_integral: int = 0
    fathomed_depth: int = 0
    relaxations_failed: int = 0
    sle_iterations: int = 0
    incumbent_updates: int = 0
    level_rule_c: int = 0
    level_rule_d: int = 0
    nodes_by_depth: dict[int, int] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "created": self.created,
            "expanded": self.expanded,
            "fathomed_bound": self.fathomed_bound,
            "fathomed_infeasible": self.fathomed_infeasible,
            "fathomed_integral": self.fathomed_integral,
            "fathomed_depth": self.fathomed_depth,
            "relaxations_failed": self.relaxations_failed,
            "sle_iterations": self.sle_iterations,
            "incumbent_updates": self.incumbent_updates,
            "level_rule_c": self.level_rule_c,
            "level_rule_d": self.level_rule_d,
            "nodes_by_depth": {str(k): v for k, v in
                               sorted(self.nodes_by_depth.items())},
        }


@dataclass
class BnbConfig:
    epsilon: float = 1e-9
    max_iters: int = 2000
    depth_cap: int = 64
    node_cap: int = 1_000_000
    branch_rule: str = "highest_fraction"   # or "least_fraction"
    pim: PimContext | None = None


@dataclass
class BnbState:
    problem: IlpProblem
    config: BnbConfig
    open_nodes: list = field(default_factory=list)  # heap of (key, id, node)
    incumbent_x: tuple[int, ...] | None = None
    incumbent_obj: int | None = None
    stats: BnbStats = field(default_factory=BnbStats)
    next_id: int = 0
    capped: bool = False
    root_failure: tuple[str, ...] | None = None

    @property
    def maximize(self) -> bool:
        return self.problem.sense is Sense.MAX

    def global_bound(self) -> int | None:
        """Best proven objective so far (the incumbent's value)."""
        return self.incumbent_obj

    def better(self, obj: int) -> bool:
        if self.incumbent_obj is None:
            return True
        return obj > self.incumbent_obj if self.maximize else obj < self.incumbent_obj

    def cannot_beat(self, bound: int | None) -> bool:
        """Rule: a local bound that merely meets the incumbent is dominated."""
        if bound is None or self.incumbent_obj is None:
            return False
        return bound <= self.incumbent_obj if self.maximize \
            else bound >= self.incumbent_obj


# ---------------------------------------------------------------------------
# interval helpers

def _interval_bound(problem: IlpProblem, intervals) -> int | None:
    """Sound objective bound over the box of ranges (None if unbounded)."""
    maximize = problem.sense is Sense.MAX
    total = 0
    for a, (lo, hi) in zip(problem.cost, intervals):
        if a == 0:
            continue
        want_high = (a > 0) == maximize
        if want_high:
            if hi is None:
                return None
            total += a * hi
        else:
            total += a * lo
    return total


def tighten_intervals(problem: IlpProblem, intervals,
                      passes: int = 3) -> tuple[Interval, ...] | None:
    """Single-row range propagation; only ever shrinks, None if emptied."""
    iv = [list(t) for t in intervals]
    for _ in range(passes):
        changed = False
        for con in problem.constraints:
            lo_sum = 0
            skip = False
            for k, c in enumerate(con.coeffs):
                if c > 0:
                    lo_sum += c * iv[k][0]
                elif c < 0:
                    if iv[k][1] is None:
                        skip = True
                        break
                    lo_sum += c * iv[k][1]
            if skip:
                continue
            for j, c in enumerate(con.coeffs):
                if c == 0:
                    continue
                rest = lo_sum - (c * iv[j][0] if c > 0 else c * iv[j][1])
                budget = con.rhs - rest
                if c > 0:
                    ub = budget // c
                    if iv[j][1] is None or ub < iv[j][1]:
                        iv[j][1] = ub
                        changed = True
                else:
                    lb = -(budget // -c)  # ceil division for negative coeff
                    lb = max(lb, 0)
                    if lb > iv[j][0]:
                        iv[j][0] = lb
                        changed = True
                if iv[j][1] is not None and iv[j][0] > iv[j][1]:
                    return None
        if not changed:
            break
    return tuple((lo, hi) for lo, hi in iv)


def intervals_from_chain(n: int, chain) -> tuple[Interval, ...] | None:
    """Fold branch constraints into per-variable ranges; None if empty."""
    iv: list[list[int | None]] = [[0, None] for _ in range(n)]
    for bc in chain:
        lo, hi = iv[bc.var]
        if bc.direction is BranchDir.FLOOR:
            hi = bc.value if hi is None else min(hi, bc.value)
        else:
            lo = max(lo, bc.value)
        if hi is not None and lo > hi:
            return None
        iv[bc.var] = [lo, hi]
    return tuple((int(lo), hi) for lo, hi in iv)  # type: ignore[arg-type]


def _int_feasible(problem: IlpProblem, x: list[int]) -> bool:
    if any(v < 0 for v in x):
        return False
    for con in problem.constraints:
        if sum(c * v for c, v in zip(con.coeffs, x)) > con.rhs:
            return False
    return True


def _objective(problem: IlpProblem, x) -> int:
    return sum(a * v for a, v in zip(problem.cost, x))


# ---------------------------------------------------------------------------
# relaxation with reuse of the square-system solver

@dataclass
class RelaxResult:
    x: tuple[float, ...] | None    # composed, clamped into the node ranges
    objective: float | None
    iterations: int
    flags: tuple[str, ...] = ()
    verified_feasible: bool | None = None


def solve_child(problem: IlpProblem, intervals,
                config: BnbConfig | None = None) -> RelaxResult:
    """Relax one node: substitute pinned variables, solve the free square
    system, fix out-of-range values at the nearest endpoint, re-solve, and
    verify the composed point against every constraint."""
    cfg = config or BnbConfig()
    if intervals is None:
        return RelaxResult(None, None, 0, ("empty_ranges",))
    pins: dict[int, int] = {j: lo for j, (lo, hi) in enumerate(intervals)
                            if hi is not None and lo == hi}
    iterations = 0
    flags: list[str] = []
    for _ in range(problem.n + 1):
        if len(pins) == problem.n:
            values = {j: float(v) for j, v in pins.items()}
            break
        try:
            system = select_square_system(
                problem, {j: Fraction(v) for j, v in pins.items()})
        except NoDiagonalError:
            return RelaxResult(None, None, iterations, ("no_diagonal",))
        result = solve_sle(system, cfg.epsilon, cfg.max_iters, cfg.pim)
        iterations += result.iterations
        flags.extend(f for f in result.flags if f not in flags)
        if not result.converged:
            return RelaxResult(None, None, iterations,
                               tuple(flags) + ("not_converged",))
        values = {j: float(v) for j, v in pins.items()}
        for var, val in zip(system.free_vars, result.x):
            values[var] = float(val)
        # fix the worst out-of-range free variable at its nearest endpoint
        worst_var, worst_gap = None, FRAC_TOL
        for var in system.free_vars:
            lo, hi = intervals[var]
            v = values[var]
            clamped = max(v, lo) if hi is None else min(max(v, lo), hi)
            gap = abs(clamped - v)
            if gap > worst_gap:
                worst_gap, worst_var = gap, var
        if worst_var is None:
            break
        lo, hi = intervals[worst_var]
        v = values[worst_var]
        pins[worst_var] = lo if v < lo else hi  # type: ignore[assignment]
    x = tuple(values[j] for j in range(problem.n))
    clamped = tuple(_clamp(v, intervals[j]) for j, v in enumerate(x))
    # guidance-level verification: floats get a small slack, integer probes
    # downstream re-check exactly
    feasible = all(v >= -FRAC_TOL for v in clamped) and all(
        sum(c * v for c, v in zip(con.coeffs, clamped)) <= con.rhs + FRAC_TOL
        for con in problem.constraints)
    obj = sum(a * v for a, v in zip(problem.cost, clamped))
    if cfg.pim is not None and cfg.pim.ledger is not None:
        _charge_verification(problem, intervals, cfg.pim.ledger)
    return RelaxResult(clamped, obj, iterations, tuple(flags), feasible)


def _charge_verification(problem: IlpProblem, intervals, ledger) -> None:
    """Checking the composed point is queue traffic plus compares: every
    original row, then every active branch bound."""
    for con in problem.constraints:
        nnz = sum(1 for c in con.coeffs if c != 0)
        ledger.charge_alu("queue_rw", nnz + 1)
        ledger.charge_alu("sub_op", 1)
    for lo, hi in intervals:
        if lo > 0 or hi is not None:
            ledger.charge_alu("queue_rw", 2)
            ledger.charge_alu("sub_op", 1)


def _clamp(v: float, interval: Interval) -> float:
    lo, hi = interval
    v = max(v, lo)
    return v if hi is None else min(v, hi)


# ---------------------------------------------------------------------------
# branching rules

def select_branch_variable(x, rule: str = "highest_fraction",
                           eligible=None) -> int:
    """Pick the fractional component to branch on (ties: lowest index)."""
    best_j, best_f = None, None
    for j, v in enumerate(x):
        if eligible is not None and j not in eligible:
            continue
        f = v - math.floor(v)
        if f <= FRAC_TOL or f >= 1 - FRAC_TOL:
            continue
        if best_f is None or (f > best_f if rule == "highest_fraction"
                              else f < best_f):
            best_j, best_f = j, f
    if best_j is None:
        raise ValueError("no fractional component to branch on")
    return best_j


def expand_node(node: BnbNode, x_b: float, var: int) -> list[tuple[BranchConstraint, tuple[Interval, ...]]]:
    """Floor/ceil split of a node on a fractional value."""
    lo, hi = node.intervals[var]
    f, c = math.floor(x_b), math.ceil(x_b)
    out = []
    if f >= lo:
        out.append((BranchConstraint(var, BranchDir.FLOOR, f),
                    _with_range(node.intervals, var, lo, f)))
    if hi is None or c <= hi:
        out.append((BranchConstraint(var, BranchDir.CEIL, c),
                    _with_range(node.intervals, var, c, hi)))
    return out


def _split_integral(node: BnbNode, var: int, value: int
                    ) -> list[tuple[BranchConstraint | None, tuple[Interval, ...]]]:
    """Three-way split around an integral relaxation value: the value
    itself, everything below, everything above.  Keeps the enumeration
    complete when the relaxation gives no fractional guidance."""
    lo, hi = node.intervals[var]
    value = int(_clamp(value, (lo, hi)))
    out: list[tuple[BranchConstraint | None, tuple[Interval, ...]]] = [
        (None, _with_range(node.intervals, var, value, value))]
    if value - 1 >= lo:
        out.append((BranchConstraint(var, BranchDir.FLOOR, value - 1),
                    _with_range(node.intervals, var, lo, value - 1)))
    if hi is None or value + 1 <= hi:
        out.append((BranchConstraint(var, BranchDir.CEIL, value + 1),
                    _with_range(node.intervals, var, value + 1, hi)))
    return out


def _with_range(intervals, var: int, lo: int, hi: int | None):
    return tuple((lo, hi) if j == var else iv
                 for j, iv in enumerate(intervals))


# ---------------------------------------------------------------------------
# driver loop

def init_bounds(problem: IlpProblem, config: BnbConfig | None = None) -> BnbState:
    """Root relaxation, initial incumbent probes, and the root node.

    A failed root relaxation (divergence or no usable diagonal) aborts the
    whole search: ``root_failure`` carries the flags and the caller reports
    a non-converged run.
    """
    cfg = config or BnbConfig()
    state = BnbState(problem, cfg)
    base = tuple((0, None) for _ in range(problem.n))
    intervals = tighten_intervals(problem, base)
    if intervals is None:
        return state  # provably empty: queue stays empty, no incumbent
    relax = solve_child(problem, intervals, cfg)
    state.stats.sle_iterations += relax.iterations
    if relax.x is None and "no_diagonal" not in relax.flags:
        # a diverging root solve aborts the run; a merely unassignable
        # square system (more variables than rows) only costs guidance
        state.stats.relaxations_failed += 1
        state.root_failure = relax.flags or ("root_relaxation_failed",)
        return state
    if relax.x is not None:
        _probe_rounding(state, relax.x, intervals)
    else:
        state.stats.relaxations_failed += 1
    node = BnbNode(0, None, 0, None, intervals,
                   _interval_bound(problem, intervals),
                   relax.x, relax.objective, relax.flags)
    state.next_id = 1
    state.stats.created = 1
    state.stats.nodes_by_depth[0] = 1
    _push(state, node)
    _maybe_take_integral(state, node, relax)
    return state


def _push(state: BnbState, node: BnbNode) -> None:
    if state.cannot_beat(node.local_bound):
        state.stats.fathomed_bound += 1
        return
    primary = math.inf if node.local_bound is None else node.local_bound
    key = -primary if state.maximize else primary
    heapq.heappush(state.open_nodes, (key, node.id, node))


def select_branch_node(state: BnbState) -> BnbNode | None:
    """Best local bound first; ties by lowest node id."""
    while state.open_nodes:
        _, _, node = heapq.heappop(state.open_nodes)
        if state.cannot_beat(node.local_bound):
            state.stats.fathomed_bound += 1
            continue
        return node
    return None


def _take_incumbent(state: BnbState, x: list[int]) -> None:
    obj = _objective(state.problem, x)
    if state.better(obj):
        state.incumbent_x = tuple(x)
        state.incumbent_obj = obj
        state.stats.incumbent_updates += 1


def _probe_rounding(state: BnbState, x, intervals) -> None:
    for rounder in (math.floor, math.ceil):
        cand = [int(_clamp(rounder(v), intervals[j]))
                for j, v in enumerate(x)]
        if _int_feasible(state.problem, cand):
            _take_incumbent(state, cand)


def _maybe_take_integral(state: BnbState, node: BnbNode, relax: RelaxResult) -> bool:
    """Rule: an all-integer feasible relaxation updates the incumbent.

    The integer rounding is re-checked exactly, so float noise in the
    relaxation can never admit a bogus incumbent.
    """
    if relax.x is None:
        return False
    ints = [round(v) for v in relax.x]
    if all(abs(v - i) <= FRAC_TOL for v, i in zip(relax.x, ints)) \
            and _int_feasible(state.problem, ints):
        _take_incumbent(state, ints)
        return True
    return False


def prune(state: BnbState) -> None:
    """Sweep dominated open nodes; count the level-wide stop conditions.

    Bound dominance (an open node that cannot beat the incumbent) does the
    fathoming.  The two identical-objective endgame conditions are detected
    over the open frontier and counted; they terminate nothing on their own
    because with equality-system relaxations they are not sound, but the
    bound sweep fires in exactly the situations where they would be.
    """
    kept = []
    frontier_objs = []
    any_integral = False
    any_infeasible = False
    while state.open_nodes:
        key, nid, node = heapq.heappop(state.open_nodes)
        if state.cannot_beat(node.local_bound):
            state.stats.fathomed_bound += 1
            continue
        kept.append((key, nid, node))
        if node.relaxed_obj is not None:
            frontier_objs.append(round(node.relaxed_obj, 6))
            ints = node.relaxed_x is not None and all(
                abs(v - round(v)) <= FRAC_TOL for v in node.relaxed_x)
            any_integral = any_integral or ints
        else:
            any_infeasible = True
    state.open_nodes = kept
    heapq.heapify(state.open_nodes)
    if frontier_objs and any_integral and len(set(frontier_objs)) == 1:
        if any_infeasible:
            state.stats.level_rule_d += 1
        else:
            state.stats.level_rule_c += 1


def solve_ilp(problem: IlpProblem, config: BnbConfig | None = None
              ) -> tuple[Solution, BnbStats]:
    """Full search; a returned optimum is exact (bounds are sound)."""
    cfg = config or BnbConfig()
    if not problem.integral:
        raise ValueError("branch and bound applies to integral problems")
    state = init_bounds(problem, cfg)
    return run_search(state)


def run_search(state: BnbState) -> tuple[Solution, BnbStats]:
    """Drain the open queue from an initialized state."""
    problem, cfg = state.problem, state.config
    if state.root_failure is not None:
        return Solution(Status.NOT_CONVERGED, flags=state.root_failure), state.stats

    while True:
        if state.stats.created >= cfg.node_cap:
            state.capped = True
            break
        node = select_branch_node(state)
        if node is None:
            break
        if node.depth >= cfg.depth_cap:
            # fathomed by the depth limit: its subtree stays unexplored, so
            # the final verdict can no longer claim optimality
            state.stats.fathomed_depth += 1
            state.capped = True
            continue
        pinned = node.pinned()
        if len(pinned) == problem.n:
            xs = [pinned[j] for j in range(problem.n)]
            if _int_feasible(problem, xs):
                _take_incumbent(state, xs)
                state.stats.fathomed_integral += 1
            else:
                state.stats.fathomed_infeasible += 1
            continue

        children = _expand(state, node, cfg)
        state.stats.expanded += 1
        for branch, intervals in children:
            _admit_child(state, node, branch, intervals, cfg)
        prune(state)

    status = Status.NOT_CONVERGED if state.capped else (
        Status.OPTIMAL if state.incumbent_obj is not None else Status.INFEASIBLE)
    if status is Status.OPTIMAL:
        report = check_feasibility(problem, state.incumbent_x)
        assert report.feasible, "incumbent must verify"
        sol = Solution(Status.OPTIMAL,
                       tuple(Fraction(v) for v in state.incumbent_x),
                       Fraction(state.incumbent_obj))
    elif status is Status.INFEASIBLE:
        sol = Solution(Status.INFEASIBLE)
    else:
        x = None if state.incumbent_x is None else \
            tuple(Fraction(v) for v in state.incumbent_x)
        obj = None if state.incumbent_obj is None else Fraction(state.incumbent_obj)
        sol = Solution(Status.NOT_CONVERGED, x, obj, ("caps_exceeded",))
    return sol, state.stats


def _expand(state: BnbState, node: BnbNode, cfg: BnbConfig):
    pinned = node.pinned()
    if node.relaxed_x is not None:
        try:
            var = select_branch_variable(
                node.relaxed_x, cfg.branch_rule,
                eligible={j for j in range(state.problem.n) if j not in pinned})
            return expand_node(node, node.relaxed_x[var], var)
        except ValueError:
            pass  # relaxation integral: fall through to the three-way split
    var = min(j for j in range(state.problem.n) if j not in pinned)
    if node.relaxed_x is not None:
        value = int(round(node.relaxed_x[var]))
    else:
        lo, hi = node.intervals[var]
        value = lo if hi is None else (lo + hi) // 2
    return _split_integral(node, var, value)


def _admit_child(state: BnbState, parent: BnbNode,
                 branch: BranchConstraint | None, intervals, cfg: BnbConfig) -> None:
    state.stats.created += 1
    depth = parent.depth + 1
    state.stats.nodes_by_depth[depth] = state.stats.nodes_by_depth.get(depth, 0) + 1
    node_id = state.next_id
    state.next_id += 1
    if cfg.pim is not None and cfg.pim.ledger is not None:
        # branch value, branch variable, parent id pushed into their arrays
        cfg.pim.ledger.charge_alu("queue_rw", 3)
        cfg.pim.ledger.charge_alu("sub_op", 1)  # bound comparison
    tightened = tighten_intervals(state.problem, intervals)
    if tightened is None:
        state.stats.fathomed_infeasible += 1
        return
    bound = _interval_bound(state.problem, tightened)
    # bounds never loosen along a path
    if parent.local_bound is not None:
        if bound is None:
            bound = parent.local_bound
        elif state.maximize:
            bound = min(bound, parent.local_bound)
        else:
            bound = max(bound, parent.local_bound)
    node = BnbNode(node_id, parent.id, depth, branch, tightened, bound)
    if state.cannot_beat(bound):
        state.stats.fathomed_bound += 1
        return
    relax = solve_child(state.problem, tightened, cfg)
    state.stats.sle_iterations += relax.iterations
    if relax.x is not None:
        node.relaxed_x = relax.x
        node.relaxed_obj = relax.objective
        node.relax_flags = relax.flags
        _probe_rounding(state, relax.x, tightened)
        if _maybe_take_integral(state, node, relax) and state.cannot_beat(bound):
            state.stats.fathomed_integral += 1
            return
    else:
        state.stats.relaxations_failed += 1
        node.relax_flags = relax.flags
    _push(state, node)
