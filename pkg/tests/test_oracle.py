from fractions import Fraction

import pytest

from spark_sim.oracle import (SingularMatrixError, UnboundedBoxError,
                              brute_force_ilp, derive_box, lp_reference)
from spark_sim.problem import Constraint, IlpProblem, Status


def _two_var():
    return IlpProblem((3, 2), (
        Constraint((1, 1), 4),
        Constraint((2, 1), 6),
    ))


def test_brute_force_small_max():
    sol = brute_force_ilp(_two_var(), box=(4, 4))
    assert sol.status is Status.OPTIMAL
    # exhaustive scan is its own witness; spot-check feasibility and a rival
    assert sol.objective == 3 * sol.x[0] + 2 * sol.x[1]
    assert sol.x[0] + sol.x[1] <= 4 and 2 * sol.x[0] + sol.x[1] <= 6
    assert sol.objective >= 3 * 0 + 2 * 4  # (0, 4) is feasible


def test_brute_force_empty_box_infeasible():
    p = IlpProblem((1,), (Constraint((1,), -1), Constraint((1,), 5)))
    assert brute_force_ilp(p, box=(5,)).status is Status.INFEASIBLE


def test_brute_force_zero_cost_degenerate():
    p = IlpProblem((0, 0), (Constraint((1, 1), 3),), coeff_width=16)
    sol = brute_force_ilp(p, box=(3, 3))
    assert sol.status is Status.OPTIMAL and sol.objective == 0


def test_derive_box_uses_only_all_nonnegative_rows():
    p = IlpProblem((1, 1), (
        Constraint((2, 1), 8),     # caps x0 at 4, x1 at 8
        Constraint((1, -5), 1),    # mixed signs: no sound cap
    ))
    assert derive_box(p) == [4, 8]


def test_derive_box_unbounded_error():
    p = IlpProblem((1, 1), (Constraint((1, -1), 3),))
    with pytest.raises(UnboundedBoxError):
        derive_box(p)


def test_brute_force_enumeration_cap():
    p = IlpProblem((1,) * 5, (Constraint((1,) * 5, 10**4),))
    with pytest.raises(UnboundedBoxError):
        brute_force_ilp(p, box=(100,) * 5)


def test_lp_reference_identity():
    assert lp_reference([[1, 0], [0, 1]], [3, 5]) == [3, 5]


def test_lp_reference_exact_fractions():
    x = lp_reference([[4, 1], [1, 3]], [9, 7])
    assert x == [Fraction(20, 11), Fraction(19, 11)]


def test_lp_reference_singular():
    with pytest.raises(SingularMatrixError):
        lp_reference([[1, 1], [1, 1]], [2, 2])
