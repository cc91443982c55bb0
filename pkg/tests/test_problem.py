import json
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from spark_sim.problem import (Constraint, IlpProblem, ProblemError, Sense,
                               check_feasibility, dumps, evaluate_objective,
                               normalize, parse_problem)


def test_parse_one_constraint_json():
    doc = json.dumps({"sense": "max", "cost": [3, 2], "integral": True,
                      "constraints": [{"coeffs": [1, 1], "rhs": 4}]})
    p = parse_problem(doc)
    assert p.n == 2 and p.m == 1
    assert p.sense is Sense.MAX and p.integral
    assert p.constraints[0] == Constraint((1, 1), 4)


def test_parse_mps_ge_row_negated():
    mps = """NAME t
ROWS
 N obj
 G r1
COLUMNS
 x1 obj 1 r1 1
 x2 obj 1 r1 -2
RHS
 rhs r1 5
ENDATA
"""
    p = parse_problem(mps)
    assert p.constraints[0] == Constraint((-1, 2), -5)


def test_parse_mps_equality_split():
    mps = """NAME t
ROWS
 N obj
 E r1
COLUMNS
 x1 obj 1 r1 1
 x2 obj 1 r1 1
RHS
 rhs r1 3
ENDATA
"""
    p = parse_problem(mps)
    assert Constraint((1, 1), 3) in p.constraints
    assert Constraint((-1, -1), -3) in p.constraints
    assert p.m == 2


def test_parse_mps_integer_marker_and_bounds():
    mps = """NAME t
ROWS
 N obj
 L r1
COLUMNS
 m1 'MARKER' 'INTORG'
 x1 obj 2 r1 3
 x2 obj 1 r1 1
 m2 'MARKER' 'INTEND'
RHS
 rhs r1 9
BOUNDS
 UI b x1 4
ENDATA
"""
    p = parse_problem(mps)
    assert p.integral
    assert Constraint((1, 0), 4) in p.constraints


@pytest.mark.parametrize("bad", [
    "{not json",
    json.dumps({"cost": [1]}),                       # no constraints
    json.dumps({"cost": [1], "constraints": []}),
    "NAME x\nROWS\nENDATA\n",                        # empty sections
])
def test_parse_errors(bad):
    with pytest.raises(ProblemError):
        parse_problem(bad)


def test_coefficient_overflow_rejected():
    doc = json.dumps({"cost": [40000], "constraints":
                      [{"coeffs": [1], "rhs": 2}]})
    with pytest.raises(ProblemError):
        parse_problem(doc)
    # wider width admits it
    doc = json.dumps({"cost": [40000], "coeff_width": 32,
                      "constraints": [{"coeffs": [1], "rhs": 2}]})
    assert parse_problem(doc).cost == (40000,)


@pytest.mark.parametrize("cost,x,expected", [
    ((3, 2), (0, 0), 0),
    ((3, 2), (1, 1), 5),
    ((5, 4, 3), (2, 0, 1), 13),
])
def test_evaluate_objective(cost, x, expected):
    p = IlpProblem(cost, (Constraint(tuple([1] * len(cost)), 100),))
    assert evaluate_objective(p, x) == expected


def test_evaluate_dimension_mismatch():
    p = IlpProblem((1, 2), (Constraint((1, 1), 4),))
    with pytest.raises(ProblemError):
        evaluate_objective(p, (1,))


def test_check_feasibility_origin():
    p = IlpProblem((1, 1), (Constraint((1, 1), 4), Constraint((2, -1), 0)))
    assert check_feasibility(p, (0, 0)).feasible


def test_check_feasibility_violated_row():
    p = IlpProblem((1, 1), (Constraint((1, 1), 4),))
    report = check_feasibility(p, (3, 2))
    assert not report.feasible
    assert report.violated_rows == (0,)


def test_check_feasibility_integrality_marker():
    p = IlpProblem((1, 1), (Constraint((1, 1), 4),), integral=True)
    report = check_feasibility(p, (Fraction(3, 2), 0))
    assert not report.feasible
    assert ("fractional", 0) in report.violations


def test_check_feasibility_negative_marker():
    p = IlpProblem((1, 1), (Constraint((1, 1), 4),))
    report = check_feasibility(p, (-1, 0))
    assert ("negative", 0) in report.violations


def test_normalize_drops_satisfied_zero_rows():
    p = IlpProblem((1,), (Constraint((0,), 3), Constraint((1,), 2)))
    q = normalize(p)
    assert q.m == 1 and q.constraints[0].coeffs == (1,)
    assert normalize(q) == q  # idempotent


def test_normalize_keeps_unsatisfiable_zero_row():
    p = IlpProblem((1,), (Constraint((0,), -1), Constraint((1,), 2)))
    assert normalize(p).m == 2


problems = st.builds(
    lambda n, rows, cost, sense, integral: IlpProblem(
        tuple(cost[:n]),
        tuple(Constraint(tuple(r[:n]), rhs) for r, rhs in rows),
        sense, integral),
    st.shared(st.integers(1, 5), key="n"),
    st.lists(st.tuples(st.lists(st.integers(-99, 99), min_size=5, max_size=5),
                       st.integers(-99, 99)), min_size=1, max_size=6),
    st.lists(st.integers(-99, 99), min_size=5, max_size=5),
    st.sampled_from([Sense.MAX, Sense.MIN]),
    st.booleans(),
)


@given(problems)
def test_serialize_parse_roundtrip(p):
    assert parse_problem(dumps(p)) == normalize(p)


@given(problems)
def test_normalize_idempotent(p):
    q = normalize(p)
    assert normalize(q) == q
