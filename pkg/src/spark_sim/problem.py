"""Problem representation shared by every engine.

A problem is a linear program ``optimize A.x  s.t.  C.x <= D, x >= 0``
(componentwise), optionally with integrality on all variables.  All
constraints are held in canonical ``<=`` form; ``>=`` and ``=`` rows are
rewritten at parse time so the engines only ever see one comparison
direction.  Coefficients are signed integers bounded by ``coeff_width``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Sequence


class ProblemError(ValueError):
    """Malformed or unrepresentable problem document."""


class Sense(str, Enum):
    MAX = "max"
    MIN = "min"


class Status(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    NOT_CONVERGED = "not_converged"
    UNBOUNDED = "unbounded"
    NO_CANDIDATE = "no_candidate"


@dataclass(frozen=True)
class Constraint:
    """One canonical row ``coeffs . x <= rhs``."""

    coeffs: tuple[int, ...]
    rhs: int


@dataclass(frozen=True)
class IlpProblem:
    cost: tuple[int, ...]
    constraints: tuple[Constraint, ...]
    sense: Sense = Sense.MAX
    integral: bool = True
    coeff_width: int = 16
    name: str = "problem"

    @property
    def n(self) -> int:
        return len(self.cost)

    @property
    def m(self) -> int:
        return len(self.constraints)

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ProblemError("need at least one variable and one constraint")
        limit = 1 << (self.coeff_width - 1)
        for a in self.cost:
            _check_width(a, limit, "cost")
        for c in self.constraints:
            if len(c.coeffs) != self.n:
                raise ProblemError("constraint arity mismatch")
            for v in c.coeffs:
                _check_width(v, limit, "coefficient")
            _check_width(c.rhs, limit, "rhs")

    def row(self, i: int) -> Constraint:
        return self.constraints[i]


def _check_width(v: int, limit: int, what: str) -> None:
    if not isinstance(v, int) or isinstance(v, bool):
        raise ProblemError(f"{what} {v!r} is not an integer")
    if not -limit < v < limit:
        raise ProblemError(f"{what} {v} overflows signed width (|v| < {limit})")


@dataclass(frozen=True)
class Solution:
    status: Status
    x: tuple[Fraction, ...] | None = None
    objective: Fraction | None = None
    flags: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return {
            "status": self.status.value,
            "x": None if self.x is None else [str(v) for v in self.x],
            "objective": None if self.objective is None else str(self.objective),
            "flags": list(self.flags),
        }


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    # (kind, index): kind is "row" for a violated constraint,
    # "negative" / "fractional" for variable-level violations
    violations: tuple[tuple[str, int], ...] = ()

    @property
    def violated_rows(self) -> tuple[int, ...]:
        return tuple(i for k, i in self.violations if k == "row")


def evaluate_objective(problem: IlpProblem, x: Sequence) -> Fraction:
    """Exact objective value ``sum(cost_j * x_j)``."""
    if len(x) != problem.n:
        raise ProblemError(f"expected {problem.n} values, got {len(x)}")
    return sum((Fraction(a) * Fraction(v) for a, v in zip(problem.cost, x)),
               start=Fraction(0))


def check_feasibility(problem: IlpProblem, x: Sequence) -> FeasibilityReport:
    """Exact feasibility: every row, nonnegativity, and integrality."""
    if len(x) != problem.n:
        raise ProblemError(f"expected {problem.n} values, got {len(x)}")
    xs = [Fraction(v) for v in x]
    violations: list[tuple[str, int]] = []
    for i, con in enumerate(problem.constraints):
        lhs = sum((Fraction(c) * v for c, v in zip(con.coeffs, xs)), start=Fraction(0))
        if lhs > con.rhs:
            violations.append(("row", i))
    for j, v in enumerate(xs):
        if v < 0:
            violations.append(("negative", j))
        elif problem.integral and v.denominator != 1:
            violations.append(("fractional", j))
    return FeasibilityReport(not violations, tuple(violations))


# --------------------------------------------------------------------------
# normalization

def normalize(problem: IlpProblem) -> IlpProblem:
    """Drop vacuous all-zero rows whose rhs is satisfied.

    All-zero rows with negative rhs are kept: they make the whole problem
    infeasible and the detection stage reports that explicitly.  Idempotent.
    """
    kept = [c for c in problem.constraints
            if any(v != 0 for v in c.coeffs) or c.rhs < 0]
    if not kept:
        # everything was vacuous-satisfied; keep one trivial row so the
        # problem stays well-formed (0 <= max rhs)
        kept = [problem.constraints[0]]
    if len(kept) == problem.m:
        return problem
    return IlpProblem(problem.cost, tuple(kept), problem.sense,
                      problem.integral, problem.coeff_width, problem.name)


def _canonical_rows(coeffs: Sequence[int], rhs: int, rel: str) -> list[Constraint]:
    row = tuple(int(v) for v in coeffs)
    if rel in ("<=", "L"):
        return [Constraint(row, int(rhs))]
    if rel in (">=", "G"):
        return [Constraint(tuple(-v for v in row), -int(rhs))]
    if rel in ("=", "==", "E"):
        return [Constraint(row, int(rhs)),
                Constraint(tuple(-v for v in row), -int(rhs))]
    raise ProblemError(f"unknown relation {rel!r}")


# --------------------------------------------------------------------------
# JSON format
#
# {"sense": "max", "cost": [...], "integral": true,
#  "constraints": [{"coeffs": [...], "rhs": int, "rel": "<="?}, ...]}

def from_json_dict(doc: dict, name: str = "problem") -> IlpProblem:
    try:
        sense = Sense(doc.get("sense", "max"))
        cost = tuple(int(v) for v in doc["cost"])
        integral = bool(doc.get("integral", True))
        width = int(doc.get("coeff_width", 16))
        rows: list[Constraint] = []
        for con in doc["constraints"]:
            rows.extend(_canonical_rows(con["coeffs"], con["rhs"],
                                        con.get("rel", "<=")))
    except (KeyError, TypeError) as exc:
        raise ProblemError(f"malformed problem document: {exc}") from exc
    if not rows:
        raise ProblemError("no constraints")
    return IlpProblem(cost, tuple(rows), sense, integral, width,
                      str(doc.get("name", name)))


def to_json_dict(problem: IlpProblem) -> dict:
    return {
        "name": problem.name,
        "sense": problem.sense.value,
        "integral": problem.integral,
        "coeff_width": problem.coeff_width,
        "cost": list(problem.cost),
        "constraints": [{"coeffs": list(c.coeffs), "rhs": c.rhs}
                        for c in problem.constraints],
    }


def dumps(problem: IlpProblem) -> str:
    return json.dumps(to_json_dict(problem), indent=2, sort_keys=True) + "\n"


# --------------------------------------------------------------------------
# MPS subset: NAME/ROWS/COLUMNS/RHS/BOUNDS/ENDATA, N/L/G/E rows, integer
# markers, UP/UI bounds. Enough for small library-style instances.

def _parse_mps(text: str) -> IlpProblem:
    section = None
    name = "problem"
    obj_row: str | None = None
    row_rel: dict[str, str] = {}
    row_order: list[str] = []
    col_order: list[str] = []
    col_coeffs: dict[str, dict[str, Fraction]] = {}
    obj_coeffs: dict[str, Fraction] = {}
    rhs: dict[str, Fraction] = {}
    upper: dict[str, Fraction] = {}
    sense = Sense.MIN  # MPS convention: minimize the N row
    in_integer = False
    integer_cols: set[str] = set()

    for raw in text.splitlines():
        if not raw.strip() or raw.lstrip().startswith("*"):
            continue
        head = not raw[0].isspace()
        tok = raw.split()
        if head:
            kw = tok[0].upper()
            if kw == "NAME":
                name = tok[1] if len(tok) > 1 else name
            elif kw == "OBJSENSE":
                continue
            elif kw in ("ROWS", "COLUMNS", "RHS", "BOUNDS", "RANGES", "ENDATA"):
                section = kw
                if kw == "ENDATA":
                    break
            elif kw in ("MAX", "MAXIMIZE"):
                sense = Sense.MAX
            elif kw in ("MIN", "MINIMIZE"):
                sense = Sense.MIN
            else:
                raise ProblemError(f"unknown MPS section {kw!r}")
            continue
        if section == "ROWS":
            rel, rname = tok[0].upper(), tok[1]
            if rel == "N":
                if obj_row is None:
                    obj_row = rname
            elif rel in ("L", "G", "E"):
                row_rel[rname] = rel
                row_order.append(rname)
            else:
                raise ProblemError(f"unsupported row type {rel!r}")
        elif section == "COLUMNS":
            if len(tok) >= 3 and tok[1] == "'MARKER'":
                in_integer = tok[2] == "'INTORG'"
                continue
            col = tok[0]
            if col not in col_coeffs:
                col_coeffs[col] = {}
                col_order.append(col)
            if in_integer:
                integer_cols.add(col)
            for rname, val in zip(tok[1::2], tok[2::2]):
                value = Fraction(val)
                if rname == obj_row:
                    obj_coeffs[col] = value
                elif rname in row_rel:
                    col_coeffs[col][rname] = value
                else:
                    raise ProblemError(f"coefficient for unknown row {rname!r}")
        elif section == "RHS":
            for rname, val in zip(tok[1::2], tok[2::2]):
                if rname in row_rel:
                    rhs[rname] = Fraction(val)
        elif section == "BOUNDS":
            btype, col = tok[0].upper(), tok[2]
            if btype in ("UP", "UI"):
                upper[col] = Fraction(tok[3])
            elif btype in ("LO", "BV", "FR", "MI", "PL"):
                # default lower bound of zero already applies; BV handled as UP 1
                if btype == "BV":
                    upper[col] = Fraction(1)
            else:
                raise ProblemError(f"unsupported bound type {btype!r}")
        elif section == "RANGES":
            raise ProblemError("RANGES section not supported")

    if not row_order or not col_order:
        raise ProblemError("empty ROWS or COLUMNS section")

    def as_int(v: Fraction, what: str) -> int:
        if v.denominator != 1:
            raise ProblemError(f"non-integer {what} {v} not representable")
        return int(v)

    cost = tuple(as_int(obj_coeffs.get(c, Fraction(0)), "objective coefficient")
                 for c in col_order)
    rows: list[Constraint] = []
    for rname in row_order:
        coeffs = [as_int(col_coeffs[c].get(rname, Fraction(0)), "coefficient")
                  for c in col_order]
        rows.extend(_canonical_rows(coeffs, as_int(rhs.get(rname, Fraction(0)), "rhs"),
                                    row_rel[rname]))
    for col, ub in upper.items():
        coeffs = [1 if c == col else 0 for c in col_order]
        rows.append(Constraint(tuple(coeffs), as_int(ub, "bound")))
    if integer_cols and integer_cols != set(col_order):
        raise ProblemError("mixed integer/continuous columns not supported")
    return IlpProblem(cost, tuple(rows), sense,
                      integral=bool(integer_cols), name=name)


def parse_problem(text: str, name: str = "problem") -> IlpProblem:
    """Parse a JSON problem document or an MPS-subset file."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ProblemError(f"invalid JSON: {exc}") from exc
        return normalize(from_json_dict(doc, name))
    return normalize(_parse_mps(text))
