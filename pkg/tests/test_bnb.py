import pytest
from hypothesis import given, settings, strategies as st

from spark_sim.bnb import (BnbConfig, BnbNode, BranchConstraint, BranchDir,
                           expand_node, init_bounds, intervals_from_chain,
                           prune, run_search, select_branch_node,
                           select_branch_variable, solve_child, solve_ilp,
                           tighten_intervals)
from spark_sim.generators import gen_random_dense
from spark_sim.oracle import brute_force_ilp
from spark_sim.problem import (Constraint, IlpProblem, Sense, Status,
                               check_feasibility)


@pytest.mark.parametrize("x,expected", [
    ((1.5, 2.0), 0),
    ((1.2, 3.7), 1),
    ((1.5, 2.5), 0),  # tie goes to the lowest index
])
def test_select_branch_variable(x, expected):
    assert select_branch_variable(x) == expected


def test_select_branch_variable_least_fraction_switch():
    assert select_branch_variable((1.2, 3.7), rule="least_fraction") == 0


def test_select_branch_variable_requires_fraction():
    with pytest.raises(ValueError):
        select_branch_variable((1.0, 2.0))


def _node(intervals):
    return BnbNode(0, None, 0, None, tuple(intervals))


def test_expand_node_floor_ceil():
    children = expand_node(_node([(0, 10), (0, 10)]), 2.4, 0)
    (floor_bc, floor_iv), (ceil_bc, ceil_iv) = children
    assert floor_bc.direction is BranchDir.FLOOR and floor_bc.value == 2
    assert floor_iv[0] == (0, 2)
    assert ceil_bc.direction is BranchDir.CEIL and ceil_bc.value == 3
    assert ceil_iv[0] == (3, 10)


def test_expand_node_floor_side_clipped_by_nonnegativity():
    children = expand_node(_node([(0, 10)]), -0.5, 0)
    # floor child would force x <= -1: never created
    assert len(children) == 1
    assert children[0][0].direction is BranchDir.CEIL
    assert children[0][1][0] == (0, 10)


def test_intervals_from_chain_conflict_detected():
    chain = [BranchConstraint(0, BranchDir.FLOOR, 1),
             BranchConstraint(0, BranchDir.CEIL, 2)]
    assert intervals_from_chain(2, chain) is None


def test_solve_child_empty_ranges_skips_sle():
    p = IlpProblem((1, 1), (Constraint((1, 1), 4),))
    result = solve_child(p, None)
    assert result.x is None and "empty_ranges" in result.flags
    assert result.iterations == 0


def test_solve_child_pins_variable_and_shrinks_system():
    p = IlpProblem((1, 1, 1), (
        Constraint((5, 1, 1), 17),
        Constraint((1, 6, 1), 20),
        Constraint((1, 1, 7), 21),
    ))
    intervals = ((0, 10), (0, 10), (2, 2))  # x2 pinned
    result = solve_child(p, intervals)
    assert result.x is not None
    assert result.x[2] == 2.0


def test_solve_child_verification_failure_reported():
    p = IlpProblem((1, 1), (
        Constraint((5, 1), 30),
        Constraint((1, 5), 30),
        Constraint((1, 1), 2),   # violated by the 5x+y system point (5,5)
    ))
    result = solve_child(p, ((3, 10), (3, 10)))
    assert result.x is not None
    assert result.verified_feasible is False


def test_tighten_intervals_detects_conflict():
    p = IlpProblem((1, 1), (Constraint((1, 1), 3),))
    assert tighten_intervals(p, ((2, 8), (2, 8))) is None
    tightened = tighten_intervals(p, ((0, 8), (0, 8)))
    assert tightened == ((0, 3), (0, 3))


def _spec_example():
    return IlpProblem((3, 2), (
        Constraint((1, 1), 4),
        Constraint((2, 1), 6),
    ), Sense.MAX, integral=True)


def test_solve_ilp_matches_brute_force_on_worked_instance():
    solution, stats = solve_ilp(_spec_example())
    truth = brute_force_ilp(_spec_example(), box=(4, 4))
    assert solution.status is Status.OPTIMAL
    assert solution.objective == truth.objective
    assert check_feasibility(_spec_example(), solution.x).feasible


def test_solve_ilp_integral_root_no_expansion():
    # relaxation lands on the bound corner, which is also the range bound:
    # the root fathoms without branching
    p = IlpProblem((1, 1), (
        Constraint((1, 0), 2),
        Constraint((0, 1), 3),
        Constraint((1, 1), 5),
    ), Sense.MAX, integral=True)
    solution, stats = solve_ilp(p)
    assert solution.status is Status.OPTIMAL and solution.objective == 5
    assert stats.expanded == 0


def test_solve_ilp_infeasible():
    p = IlpProblem((1,), (Constraint((1,), 5), Constraint((-1,), -8)),
                   Sense.MAX, integral=True)
    solution, _ = solve_ilp(p)
    assert solution.status is Status.INFEASIBLE


def test_solve_ilp_node_cap_reports_not_converged():
    p = gen_random_dense(seed=11)
    solution, _ = solve_ilp(p, BnbConfig(node_cap=1))
    assert solution.status is Status.NOT_CONVERGED
    assert "caps_exceeded" in solution.flags


def test_prune_drops_dominated_open_nodes():
    p = _spec_example()
    state = init_bounds(p, BnbConfig())
    state.incumbent_x = (2, 2)
    state.incumbent_obj = 10
    # plant a dominated node
    from spark_sim.bnb import _push
    dominated = BnbNode(99, 0, 1, None, ((0, 1), (0, 1)), local_bound=5)
    _push(state, dominated)
    before = state.stats.fathomed_bound
    prune(state)
    assert all(node.local_bound is None or node.local_bound > 10
               for _, _, node in state.open_nodes)
    assert state.stats.fathomed_bound >= before


def test_bound_monotonicity_along_paths():
    # a child's bound never improves on its parent's
    for seed in range(30):
        p = gen_random_dense(seed=seed)
        maximize = p.sense is Sense.MAX
        state = init_bounds(p, BnbConfig())
        sol, stats = run_search(state)
        if sol.status is not Status.OPTIMAL:
            continue
        # replay: expand the root once and compare child bounds
        state2 = init_bounds(p, BnbConfig())
        root = select_branch_node(state2)
        if root is None or root.relaxed_x is None:
            continue
        try:
            var = select_branch_variable(root.relaxed_x)
        except ValueError:
            continue
        for branch, intervals in expand_node(root, root.relaxed_x[var], var):
            tightened = tighten_intervals(p, intervals)
            if tightened is None:
                continue
            from spark_sim.bnb import _interval_bound
            child_bound = _interval_bound(p, tightened)
            if child_bound is None or root.local_bound is None:
                continue
            if maximize:
                assert child_bound <= root.local_bound
            else:
                assert child_bound >= root.local_bound


def test_node_accounting_balances():
    for seed in range(20):
        p = gen_random_dense(seed=seed)
        state = init_bounds(p, BnbConfig())
        sol, stats = run_search(state)
        fathomed = (stats.fathomed_bound + stats.fathomed_infeasible
                    + stats.fathomed_integral + stats.fathomed_depth)
        assert stats.created == stats.expanded + fathomed + len(state.open_nodes)


def test_depth_cap_fathoms_but_search_continues():
    p = gen_random_dense(seed=0)
    solution, stats = solve_ilp(p, BnbConfig(depth_cap=1))
    assert stats.fathomed_depth > 0
    # capped search never claims optimality, but keeps its best incumbent
    assert solution.status is Status.NOT_CONVERGED
    assert "caps_exceeded" in solution.flags
    assert solution.x is not None


def test_worked_two_var_shape_branches_highest_fraction_first():
    # relaxation of the two-row system is fractional in x1 with the larger
    # fractional part, so the first expansion must branch on it
    p = IlpProblem((2, 3), (
        Constraint((3, 1), 7),    # intersection: x0 = 13/8, x1 = 17/8
        Constraint((1, 3), 8),
    ), Sense.MAX, integral=True)
    state = init_bounds(p, BnbConfig())
    root = select_branch_node(state)
    assert root is not None and root.relaxed_x is not None
    fracs = [v - int(v) for v in root.relaxed_x]
    var = select_branch_variable(root.relaxed_x)
    assert fracs[var] == max(fracs)
    children = expand_node(root, root.relaxed_x[var], var)
    dirs = {bc.direction for bc, _ in children}
    assert dirs == {BranchDir.FLOOR, BranchDir.CEIL}


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_optimal_solutions_verify(seed):
    p = gen_random_dense(seed=seed % 4000)
    solution, _ = solve_ilp(p)
    if solution.status is Status.OPTIMAL:
        report = check_feasibility(p, solution.x)
        assert report.feasible


def test_oracle_equivalence_sample():
    for seed in range(60):
        p = gen_random_dense(seed=seed)
        want = brute_force_ilp(p)
        got, _ = solve_ilp(p)
        assert got.status is Status.OPTIMAL
        assert got.objective == want.objective, p.name
