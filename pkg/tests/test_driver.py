from fractions import Fraction

from spark_sim.cost import CostConfig
from spark_sim.driver import SimConfig, run, run_matrix
from spark_sim.generators import (gen_investment, gen_random_dense,
                                  gen_transportation, sparse_suite)
from spark_sim.pim import CacheGeometry
from spark_sim.problem import Constraint, IlpProblem, Sense, Status


def _engines(report):
    return [span["engine"] for span in report.trace]


def test_sparse_instance_uses_sa_only():
    report = run(gen_investment(n=3, seed=4))
    assert report.verdict == "sparse"
    engines = _engines(report)
    assert "sa" in engines
    assert "bnb" not in engines and "sle" not in engines
    assert report.sa_table  # candidate dump present


def test_dense_instance_uses_sle_then_bnb():
    report = run(gen_random_dense(seed=6))
    assert report.verdict == "dense"
    engines = _engines(report)
    assert engines.index("sle") < engines.index("bnb")
    assert "sa" not in engines


def test_lp_skips_branch_and_bound():
    p = IlpProblem((3, 2), (Constraint((4, 1), 9), Constraint((1, 3), 7)),
                   Sense.MAX, integral=False)
    report = run(p)
    engines = _engines(report)
    assert "sle" in engines and "bnb" not in engines


def test_sparse_lp_keeps_rational_answer():
    p = IlpProblem((4, 5), (
        Constraint((1, 0), 3),
        Constraint((0, 1), 2),
        Constraint((2, 3), 10),
    ), Sense.MAX, integral=False)
    report = run(p)
    assert report.verdict == "sparse"
    assert "bnb" not in _engines(report)
    assert report.solution.status is Status.OPTIMAL
    # candidate with x1 = 4/3 stays fractional and wins: 12 + 20/3
    assert report.solution.x == (3, Fraction(4, 3))


def test_lp_without_square_system_reports_not_converged():
    p = IlpProblem((1, 1, 1), (Constraint((1, 1, 1), 6),),
                   Sense.MAX, integral=False)
    report = run(p)
    assert report.solution.status is Status.NOT_CONVERGED
    assert "no_diagonal" in report.solution.flags


def test_engine_activity_never_overlaps():
    for seed in (0, 1, 2):
        for problem in (gen_investment(n=2, seed=seed),
                        gen_random_dense(seed=seed)):
            spans = run(problem).trace
            for a in spans:
                for b in spans:
                    if a is b:
                        continue
                    assert a["end_cycle"] <= b["start_cycle"] \
                        or b["end_cycle"] <= a["start_cycle"]


def test_no_sa_flag_forces_dense_path():
    problem = gen_investment(n=3, seed=4)
    report = run(problem, SimConfig(sa_enabled=False))
    assert report.verdict == "sparse"  # detection verdict is unchanged
    engines = _engines(report)
    assert "sa" not in engines and "bnb" in engines


def test_sa_fallback_on_no_candidate():
    # the corner misses x+y <= 3 and every single-variable substitution
    # goes negative, so the fast path yields nothing at all
    p = IlpProblem((4, 5), (
        Constraint((1, 0), 5),
        Constraint((0, 1), 5),
        Constraint((1, 1), 3),
    ), Sense.MAX, integral=True)
    report = run(p)
    assert report.verdict == "sparse"
    assert "fallback_dense" in report.flags
    assert report.solution.status is Status.OPTIMAL
    assert report.solution.objective == 15  # (0, 3) after the fallback
    engines = _engines(report)
    assert "sa" in engines and "bnb" in engines
    sa_span = next(s for s in report.trace if s["engine"] == "sa")
    bnb_span = next(s for s in report.trace if s["engine"] == "bnb")
    assert sa_span["end_cycle"] <= bnb_span["start_cycle"]


def test_infeasible_row_short_circuit():
    p = IlpProblem((1, 1), (Constraint((1, 1), 4), Constraint((0, 0), -2)))
    report = run(p)
    assert report.solution.status is Status.INFEASIBLE
    assert any(f.startswith("infeasible_row") for f in report.flags)


def test_determinism_byte_identical_reports():
    problem = gen_random_dense(seed=9)
    config = SimConfig()
    a = run(problem, config).to_json()
    b = run(problem, config).to_json()
    assert a == b


def test_solution_invariant_under_cost_config():
    problem = gen_random_dense(seed=12)
    base = run(problem, SimConfig())
    tweaked = run(problem, SimConfig(cost=CostConfig(
        move_pj_per_bit=3.0, div_pj=0.6, l2_latency_ns=50.0)))
    assert base.solution == tweaked.solution
    assert base.ledger.energy_pj_total() != tweaked.ledger.energy_pj_total()


def test_verify_sa_keeps_better_dense_answer():
    # find a family instance where the fast path is suboptimal
    from spark_sim.fc import detect_sparsity
    from spark_sim.oracle import brute_force_ilp
    from spark_sim.sa import solve_sparse
    victim = None
    for p in sparse_suite(200):
        out = solve_sparse(detect_sparsity(p), p)
        if out.solution.status is Status.OPTIMAL and \
                out.solution.objective != brute_force_ilp(p).objective:
            victim = p
            break
    assert victim is not None, "family should contain a few hard instances"
    plain = run(victim, SimConfig())
    checked = run(victim, SimConfig(verify_sa=True))
    truth = brute_force_ilp(victim)
    assert plain.solution.objective != truth.objective
    assert checked.solution.objective == truth.objective
    assert "sa_suboptimal" in checked.flags


def test_oracle_flag_populates_report():
    report = run(gen_random_dense(seed=3), SimConfig(verify_with_oracle=True))
    assert report.oracle == {
        "checked": True, "match": True,
        "oracle_status": report.solution.status.value,
        "oracle_objective": str(report.solution.objective),
    }


def test_overflow_engages_fill_model():
    tiny = CacheGeometry(banks=2, rows=2, cols=32, word_bits=16, x_bits=2)
    problem = gen_random_dense(n=5, m=7, seed=21)
    on = run(problem, SimConfig(geometry=tiny))
    off = run(problem, SimConfig(geometry=tiny, prefetch_enabled=False))
    assert "l1_overflow" in on.flags
    assert on.fill.stall_cycles <= off.fill.stall_cycles
    assert off.fill.stall_cycles > 0
    assert on.solution == off.solution


def test_run_matrix_shapes_and_determinism():
    problems = [gen_investment(n=2, seed=1), gen_random_dense(seed=2)]
    configs = [SimConfig(), SimConfig(serial_pim=True)]
    reports, csv_text = run_matrix(problems, configs)
    assert len(reports) == 4
    lines = csv_text.strip().splitlines()
    assert len(lines) == 5  # header + 4 rows
    reports2, csv_text2 = run_matrix(problems, configs)
    assert csv_text == csv_text2


def test_run_matrix_empty():
    reports, csv_text = run_matrix([], [SimConfig()])
    assert reports == []
    assert csv_text.strip().count("\n") == 0  # header only


def test_serial_pim_never_faster():
    for seed in range(5):
        problem = gen_investment(n=3, seed=seed)
        full = run(problem, SimConfig())
        serial = run(problem, SimConfig(serial_pim=True))
        assert serial.ledger.cycles_total() >= full.ledger.cycles_total()
        assert serial.solution == full.solution


def test_transportation_is_dense_and_solvable():
    report = run(gen_transportation(2, 3, seed=1))
    assert report.verdict == "dense"
    assert report.solution.status is Status.OPTIMAL
    assert len(report.solution.x) == 6
