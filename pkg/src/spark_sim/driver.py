"""End-to-end simulation runs.

A run walks the modeled instruction flow: the fetch/control phase loads and
classifies every constraint and sets the sparse verdict; the compute phase
then executes either the sparsity-aware candidate search or the square
system solve (plus branch and bound for integral problems); the bound phase
is a no-op for sparse or continuous runs.  Events land in one ledger per
run, phase by phase, and the report carries the solution, the activity
trace, engine statistics, and the full cycle/energy breakdown.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction

from . import bnb, sa
from .cost import CostConfig, FillResult, Ledger, simulate_fill
from .divider import DivConfig
from .fc import InfeasibleRowError, SparsityPartition, detect_sparsity
from .pim import CacheGeometry, store_coefficients
from .problem import IlpProblem, Solution, Status, check_feasibility, dumps, \
    evaluate_objective, normalize
from .sle import NoDiagonalError, PimContext, select_square_system, solve_sle

CSV_COLUMNS = (
    "instance", "path", "status", "objective",
    "cycles_total", "cycles_fetch_detect", "cycles_sa", "cycles_sle",
    "cycles_bnb", "cycles_fill_stall",
    "energy_pj_total", "energy_pj_pim_compute", "energy_pj_shift_add_ar",
    "energy_pj_sub_div", "energy_pj_queues", "energy_pj_l2_to_l1",
    "energy_pj_dram_to_l2",
    "iterations", "bnb_nodes", "fill_stalls",
)


@dataclass(frozen=True)
class SimConfig:
    geometry: CacheGeometry = CacheGeometry()
    cost: CostConfig = CostConfig()
    epsilon: float | None = None      # None: one grid ulp
    max_iters: int = 2000
    depth_cap: int = 64
    node_cap: int = 1_000_000
    frac_bits: int = 8
    m_bits: int = 8
    branch_rule: str = "highest_fraction"
    sa_enabled: bool = True
    prefetch_enabled: bool = True
    serial_pim: bool = False
    approx_div_enabled: bool = True
    verify_sa: bool = False
    verify_with_oracle: bool = False

    def effective_epsilon(self) -> float:
        return self.epsilon if self.epsilon is not None else 1.0 / (1 << self.frac_bits)

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in (
            "epsilon", "max_iters", "depth_cap", "node_cap", "frac_bits",
            "m_bits", "branch_rule", "sa_enabled", "prefetch_enabled",
            "serial_pim", "approx_div_enabled", "verify_sa",
            "verify_with_oracle")}
        d["geometry"] = {k: getattr(self.geometry, k) for k in (
            "banks", "rows", "cols", "word_bits", "line_bytes", "x_bits")}
        d["cost"] = {k: getattr(self.cost, k) for k in (
            "clock_ns", "move_pj_per_bit", "rbl_cap_f", "read_cap_f", "vdd",
            "div_pj", "div_ns", "l2_bytes", "dram_bytes", "line_bytes",
            "prefetch_stride_lines", "l2_latency_ns", "dram_latency_ns")}
        return d


@dataclass
class SimReport:
    instance: str
    digest: str
    verdict: str                       # "sparse" | "dense"
    solution: Solution
    ledger: Ledger
    trace: list[dict]
    iterations: int = 0
    bnb_stats: dict = field(default_factory=dict)
    sa_table: list[dict] = field(default_factory=list)
    fill: FillResult = field(default_factory=FillResult)
    flags: tuple[str, ...] = ()
    config: dict = field(default_factory=dict)
    oracle: dict | None = None

    def as_dict(self) -> dict:
        return {
            "instance": self.instance,
            "digest": self.digest,
            "verdict": self.verdict,
            "solution": self.solution.as_dict(),
            "ledger": self.ledger.as_dict(),
            "trace": self.trace,
            "iterations": self.iterations,
            "bnb_stats": self.bnb_stats,
            "sa_table": self.sa_table,
            "fill": {"stall_cycles": self.fill.stall_cycles,
                     "fills_l2": self.fill.fills_l2,
                     "fills_dram": self.fill.fills_dram},
            "flags": list(self.flags),
            "config": self.config,
            "oracle": self.oracle,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, indent=2) + "\n"

    def csv_row(self) -> dict:
        cyc = self.ledger.cycles
        en = self.ledger.energy_pj_by_component()
        sol = self.solution
        return {
            "instance": self.instance,
            "path": self.verdict,
            "status": sol.status.value,
            "objective": "" if sol.objective is None else str(sol.objective),
            "cycles_total": self.ledger.cycles_total(),
            "cycles_fetch_detect": cyc["fetch_detect"],
            "cycles_sa": cyc["sa"],
            "cycles_sle": cyc["sle"],
            "cycles_bnb": cyc["bnb"],
            "cycles_fill_stall": cyc["fill_stall"],
            "energy_pj_total": f"{self.ledger.energy_pj_total():.4f}",
            "energy_pj_pim_compute": f"{en['pim_compute']:.4f}",
            "energy_pj_shift_add_ar": f"{en['shift_add_ar']:.4f}",
            "energy_pj_sub_div": f"{en['sub_div']:.4f}",
            "energy_pj_queues": f"{en['queues']:.4f}",
            "energy_pj_l2_to_l1": f"{en['l2_to_l1']:.4f}",
            "energy_pj_dram_to_l2": f"{en['dram_to_l2']:.4f}",
            "iterations": self.iterations,
            "bnb_nodes": self.bnb_stats.get("created", 0),
            "fill_stalls": self.fill.stall_cycles,
        }

    def cycle_summary(self) -> dict:
        return {
            "instance": self.digest,
            "cycles_total": self.ledger.cycles_total(),
            "cycles_fill_stall": self.ledger.cycles["fill_stall"],
            "fill_cycles": self.fill.fills_l2 + self.fill.fills_dram,
        }


def _digest(problem: IlpProblem) -> str:
    return hashlib.sha256(dumps(problem).encode()).hexdigest()[:16]


def run(problem: IlpProblem, config: SimConfig | None = None) -> SimReport:
    cfg = config or SimConfig()
    problem = normalize(problem)
    ledger = Ledger(cfg.cost, cfg.serial_pim)
    geom = cfg.geometry
    flags: list[str] = []

    # ---- fetch & detect -----------------------------------------------
    ledger.set_phase("fetch_detect")
    words_per_constraint = problem.n + 1
    rows_per_constraint = max(1, -(-words_per_constraint // geom.words_per_row))
    for _ in range(problem.m):
        ledger.record("row_activate", rows_per_constraint)
        ledger.add_cycles(rows_per_constraint)
        ledger.charge_alu("queue_rw", 1)

    partition: SparsityPartition | None = None
    try:
        partition = detect_sparsity(problem)
    except InfeasibleRowError as exc:
        flags.append(f"infeasible_row:{exc.row_index}")
        report = _mk_report(problem, cfg, "dense", Solution(Status.INFEASIBLE),
                            ledger, flags=tuple(flags))
        return report

    verdict = "sparse" if partition.is_sparse else "dense"

    # storage order: cardinality rows first, then general rows, then cost
    cc_rows = sorted(set(range(problem.m))
                     - set(partition.general) - set(partition.vacuous))
    ordered = cc_rows + list(partition.general)
    word_rows = [list(problem.constraints[i].coeffs) + [problem.constraints[i].rhs]
                 for i in ordered]
    word_rows.append(list(problem.cost))
    mapping, _ = store_coefficients(word_rows, geom, materialize=False)
    footprint = mapping.total_words * geom.word_bits // 8
    cold_lines = mapping.total_lines
    ledger.record("line_fill_l2", cold_lines)
    if footprint > cfg.cost.l2_bytes:
        ledger.record("line_fill_dram", cold_lines)
    ledger.add_cycles(cold_lines)

    # ---- compute ------------------------------------------------------
    ctx = PimContext(
        geometry=geom, ledger=ledger,
        div=DivConfig(m_bits=cfg.m_bits) if cfg.approx_div_enabled else None,
        frac_bits=cfg.frac_bits)
    eps = cfg.effective_epsilon()

    solution: Solution
    iterations = 0
    bnb_stats: dict = {}
    sa_table: list[dict] = []

    if partition.is_sparse and cfg.sa_enabled:
        ledger.set_phase("sa")
        outcome = sa.solve_sparse(partition, problem, ledger, geom)
        solution = outcome.solution
        sa_table = [
            {"x": [str(v) for v in e.x],
             "source": None if e.source is None else list(e.source),
             "feasible": e.feasible}
            for e in outcome.candidates]
        if solution.status is Status.NO_CANDIDATE:
            flags.append("fallback_dense")
            solution, iterations, bnb_stats = _dense_flow(
                problem, cfg, ledger, ctx, eps)
        elif cfg.verify_sa and problem.integral:
            dense_solution, dense_iters, dense_stats = _dense_flow(
                problem, cfg, ledger, ctx, eps)
            flags.append("verify_sa_ran")
            if _beats(problem, dense_solution, solution):
                flags.append("sa_suboptimal")
                solution = dense_solution
                iterations = dense_iters
                bnb_stats = dense_stats
    else:
        solution, iterations, bnb_stats = _dense_flow(
            problem, cfg, ledger, ctx, eps)

    # ---- fill model -----------------------------------------------------
    fill = FillResult()
    if mapping.overflow:
        compute_cycles = ledger.cycles["sa"] + ledger.cycles["sle"] \
            + ledger.cycles["bnb"]
        passes = max(1, iterations)
        schedule = []
        per_access = max(1, compute_cycles // max(1, passes * mapping.total_lines))
        for _ in range(passes):
            schedule.extend((line, per_access)
                            for line in range(mapping.total_lines))
        fill = simulate_fill(mapping.total_lines, geom.capacity_lines,
                             schedule, cfg.cost, cfg.prefetch_enabled,
                             footprint_bytes=footprint)
        ledger.add_cycles(fill.stall_cycles, "fill_stall")
        ledger.record("line_fill_l2", fill.fills_l2)
        ledger.record("line_fill_dram", fill.fills_dram)
        flags.append("l1_overflow")

    report = _mk_report(problem, cfg, verdict, solution, ledger,
                        iterations=iterations, bnb_stats=bnb_stats,
                        sa_table=sa_table, fill=fill, flags=tuple(flags))

    if cfg.verify_with_oracle and problem.integral:
        report.oracle = _oracle_check(problem, solution)
    return report


def _dense_flow(problem: IlpProblem, cfg: SimConfig, ledger: Ledger,
                ctx: PimContext, eps: float) -> tuple[Solution, int, dict]:
    """Square-system solve, then branch and bound for integral problems."""
    bcfg = bnb.BnbConfig(epsilon=eps, max_iters=cfg.max_iters,
                         depth_cap=cfg.depth_cap, node_cap=cfg.node_cap,
                         branch_rule=cfg.branch_rule, pim=ctx)
    if problem.integral:
        ledger.set_phase("sle")
        state = bnb.init_bounds(problem, bcfg)
        ledger.set_phase("bnb")
        solution, stats = bnb.run_search(state)
        return solution, stats.sle_iterations, stats.as_dict()

    ledger.set_phase("sle")
    try:
        system = select_square_system(problem, {})
    except NoDiagonalError:
        return Solution(Status.NOT_CONVERGED, flags=("no_diagonal",)), 0, {}
    result = solve_sle(system, eps, cfg.max_iters, ctx, warn_nondominant=True)
    x = [Fraction(0)] * problem.n
    for var, val in zip(system.free_vars, result.x):
        x[var] = val
    if not result.converged:
        return Solution(Status.NOT_CONVERGED, tuple(x), None, result.flags), \
            result.iterations, {}
    feas = check_feasibility(problem, x)
    for i in system.verify_rows:
        nnz = sum(1 for c in problem.constraints[i].coeffs if c != 0)
        ledger.charge_alu("queue_rw", nnz + 1)
        ledger.charge_alu("sub_op", 1)
    if not feas.feasible:
        return Solution(Status.INFEASIBLE, tuple(x), None,
                        ("verification_failed",) + result.flags), \
            result.iterations, {}
    return Solution(Status.OPTIMAL, tuple(x), evaluate_objective(problem, x),
                    result.flags), result.iterations, {}


def _beats(problem: IlpProblem, challenger: Solution, holder: Solution) -> bool:
    if challenger.status is not Status.OPTIMAL or challenger.objective is None:
        return False
    if holder.status is not Status.OPTIMAL or holder.objective is None:
        return True
    from .problem import Sense
    if problem.sense is Sense.MAX:
        return challenger.objective > holder.objective
    return challenger.objective < holder.objective


def _oracle_check(problem: IlpProblem, solution: Solution) -> dict:
    from .oracle import UnboundedBoxError, brute_force_ilp
    try:
        truth = brute_force_ilp(problem)
    except UnboundedBoxError:
        return {"checked": False, "reason": "unbounded_box"}
    match = (solution.status == truth.status
             and solution.objective == truth.objective)
    return {
        "checked": True,
        "match": bool(match),
        "oracle_status": truth.status.value,
        "oracle_objective": None if truth.objective is None
        else str(truth.objective),
    }


def _mk_report(problem: IlpProblem, cfg: SimConfig, verdict: str,
               solution: Solution, ledger: Ledger, iterations: int = 0,
               bnb_stats: dict | None = None, sa_table: list | None = None,
               fill: FillResult | None = None,
               flags: tuple[str, ...] = ()) -> SimReport:
    trace = []
    clock = 0
    engine_of = {"fetch_detect": "fc", "sa": "sa", "sle": "sle", "bnb": "bnb",
                 "fill_stall": "fill"}
    for phase in ("fetch_detect", "sa", "sle", "bnb", "fill_stall"):
        cycles = ledger.cycles[phase]
        if cycles:
            trace.append({"engine": engine_of[phase],
                          "start_cycle": clock, "end_cycle": clock + cycles})
            clock += cycles
    return SimReport(
        instance=problem.name, digest=_digest(problem), verdict=verdict,
        solution=solution, ledger=ledger, trace=trace, iterations=iterations,
        bnb_stats=bnb_stats or {}, sa_table=sa_table or [],
        fill=fill or FillResult(), flags=flags, config=cfg.as_dict())


def run_matrix(problems: list[IlpProblem],
               configs: list[SimConfig]) -> tuple[list[SimReport], str]:
    """Cartesian sweep; row order follows the input order."""
    reports = [run(problem, config)
               for problem in problems for config in configs]
    return reports, to_csv(reports)


def to_csv(reports: list[SimReport]) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for report in reports:
        row = report.csv_row()
        lines.append(",".join(str(row[c]) for c in CSV_COLUMNS))
    return "\n".join(lines) + "\n"
