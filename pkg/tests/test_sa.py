from fractions import Fraction

from spark_sim.fc import detect_sparsity
from spark_sim.generators import gen_investment, sparse_suite
from spark_sim.oracle import brute_force_ilp
from spark_sim.problem import (Constraint, IlpProblem, Sense, Status,
                               check_feasibility)
from spark_sim.sa import pot_costs, pot_soln, solve_sparse


def _worked_example():
    # max 4 x0 + 5 x1,  x0 <= 3, x1 <= 2, 2 x0 + 3 x1 <= 10
    return IlpProblem((4, 5), (
        Constraint((1, 0), 3),
        Constraint((0, 1), 2),
        Constraint((2, 3), 10),
    ), Sense.MAX, integral=True)


def test_pot_soln_worked_example():
    p = _worked_example()
    part = detect_sparsity(p)
    entries = pot_soln(part, p)
    xs = {e.x for e in entries}
    assert (Fraction(3), Fraction(2)) in xs        # box corner
    assert (Fraction(2), Fraction(2)) in xs        # x0 from the budget row
    assert (Fraction(3), Fraction(1)) in xs        # x1 floored from 4/3
    assert len(entries) == 3


def test_pot_soln_skips_zero_coefficients():
    p = IlpProblem((1, 1), (
        Constraint((1, 0), 3),
        Constraint((0, 1), 2),
        Constraint((2, 0), 5),   # general after the duplicate-bound rule
    ), Sense.MAX, integral=True)
    part = detect_sparsity(p)
    entries = pot_soln(part, p)
    # the zero coefficient on x1 produces no substitution candidate
    assert all(e.source is None or e.source[1] == 0 for e in entries)


def test_pot_soln_negative_substitution_marked_infeasible():
    p = IlpProblem((1, 1), (
        Constraint((1, 0), 5),
        Constraint((0, 1), 5),
        Constraint((3, 3), 2),
    ), Sense.MAX, integral=True)
    part = detect_sparsity(p)
    entries = pot_soln(part, p)
    assert all(not e.feasible for e in entries if e.source is not None)


def test_pot_costs_worked_example_optimum():
    p = _worked_example()
    part = detect_sparsity(p)
    entries = pot_soln(part, p)
    priced, solution = pot_costs(entries, p)
    costs = {entries[pc.ps_index].x: pc.cost for pc in priced}
    assert costs[(Fraction(2), Fraction(2))] == 18
    assert costs[(Fraction(3), Fraction(1))] == 17
    assert solution.status is Status.OPTIMAL
    assert solution.objective == 18 and solution.x == (2, 2)


def test_corner_optimal_when_budget_slack():
    p = IlpProblem((4, 5), (
        Constraint((1, 0), 3),
        Constraint((0, 1), 2),
        Constraint((2, 3), 99),
    ), Sense.MAX, integral=True)
    out = solve_sparse(detect_sparsity(p), p)
    assert out.solution.x == (3, 2)


def test_single_feasible_candidate_wins():
    p = IlpProblem((1, 1), (
        Constraint((1, 0), 1),
        Constraint((0, 1), 1),
        Constraint((5, 5), 5),
    ), Sense.MAX, integral=True)
    out = solve_sparse(detect_sparsity(p), p)
    assert out.solution.status is Status.OPTIMAL
    # (1,0) and (0,1) tie at cost 1; either verifies
    assert check_feasibility(p, out.solution.x).feasible


def test_no_candidate_when_everything_infeasible():
    p = IlpProblem((1, 1), (
        Constraint((1, 0), 5),
        Constraint((0, 1), 5),
        Constraint((3, 3), 2),
    ), Sense.MAX, integral=True)
    out = solve_sparse(detect_sparsity(p), p)
    assert out.solution.status is Status.NO_CANDIDATE
    assert not out.costs


def test_candidate_count_bound():
    for seed in range(40):
        p = gen_investment(n=4, seed=seed, extra_rows=1)
        part = detect_sparsity(p)
        out = solve_sparse(part, p)
        assert len(out.candidates) <= len(part.general) * p.n + 1


def test_reported_optimum_always_verifies():
    for p in sparse_suite(60):
        out = solve_sparse(detect_sparsity(p), p)
        if out.solution.status is Status.OPTIMAL:
            assert check_feasibility(p, out.solution.x).feasible


def test_family_optimality_rate():
    suite = sparse_suite(100)
    exact = 0
    answered = 0
    for p in suite:
        out = solve_sparse(detect_sparsity(p), p)
        if out.solution.status is not Status.OPTIMAL:
            continue
        answered += 1
        if out.solution.objective == brute_force_ilp(p).objective:
            exact += 1
    assert answered > 90
    assert exact / answered >= 0.95


def test_lp_candidates_stay_rational():
    p = IlpProblem((4, 5), (
        Constraint((1, 0), 3),
        Constraint((0, 1), 2),
        Constraint((2, 3), 10),
    ), Sense.MAX, integral=False)
    entries = pot_soln(detect_sparsity(p), p)
    xs = {e.x for e in entries}
    assert (Fraction(3), Fraction(4, 3)) in xs  # no flooring for LP
