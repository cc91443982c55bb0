"""Independent ground-truth solvers, used only by tests and verification.

Nothing here shares code with the engines: integer optima come from an
exhaustive scan of a finite box, linear systems from exact fraction-based
Gaussian elimination.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Sequence

import numpy as np

from .problem import IlpProblem, Sense, Solution, Status

ENUM_CAP = 10**7
_CHUNK = 1 << 16


class UnboundedBoxError(ValueError):
    """No finite enumeration box can be derived for some variable."""


class SingularMatrixError(ValueError):
    pass


def derive_box(problem: IlpProblem) -> list[int]:
    """Per-variable upper bounds implied by all-nonnegative rows.

    Only rows whose coefficients are all >= 0 give sound bounds under
    ``x >= 0``: such a row caps ``x_j`` at ``floor(rhs / c_j)`` for every
    positive ``c_j``.  Raises :class:`UnboundedBoxError` if some variable is
    not capped by any such row.
    """
    box: list[int | None] = [None] * problem.n
    for con in problem.constraints:
        if any(c < 0 for c in con.coeffs) or con.rhs < 0:
            continue
        for j, c in enumerate(con.coeffs):
            if c > 0:
                b = con.rhs // c
                box[j] = b if box[j] is None else min(box[j], b)
    missing = [j for j, b in enumerate(box) if b is None]
    if missing:
        raise UnboundedBoxError(f"no finite bound for variables {missing}")
    return [int(b) for b in box]  # type: ignore[arg-type]


def brute_force_ilp(problem: IlpProblem, box: Sequence[int] | None = None) -> Solution:
    """Exhaustively scan the integer box and return the exact optimum."""
    if not problem.integral:
        raise ValueError("brute force enumerates integer problems only")
    if box is None:
        box = derive_box(problem)
    if len(box) != problem.n or any(b < 0 for b in box):
        raise ValueError("invalid box")
    total = 1
    for b in box:
        total *= b + 1
        if total > ENUM_CAP:
            raise UnboundedBoxError(f"enumeration box exceeds cap {ENUM_CAP}")

    c_mat = np.array([con.coeffs for con in problem.constraints], dtype=np.int64)
    d_vec = np.array([con.rhs for con in problem.constraints], dtype=np.int64)
    cost = np.array(problem.cost, dtype=np.int64)
    # int64 stays exact: |coeff| < 2^15, box values are small integers
    assert int(np.abs(c_mat).max(initial=0)) * (max(box) + 1) * problem.n < 2**62

    maximize = problem.sense is Sense.MAX
    best_obj: int | None = None
    best_x: tuple[int, ...] | None = None
    ranges = [np.arange(b + 1, dtype=np.int64) for b in box]
    for chunk in _grid_chunks(ranges):
        feas = np.all(c_mat @ chunk.T <= d_vec[:, None], axis=0)
        if not feas.any():
            continue
        objs = chunk @ cost
        idx = np.flatnonzero(feas)
        pick = idx[np.argmax(objs[idx])] if maximize else idx[np.argmin(objs[idx])]
        obj = int(objs[pick])
        if best_obj is None or (obj > best_obj if maximize else obj < best_obj):
            best_obj = obj
            best_x = tuple(int(v) for v in chunk[pick])

    if best_obj is None:
        return Solution(Status.INFEASIBLE)
    # self-consistency: the reported point is feasible and scores best_obj
    assert all(sum(c * v for c, v in zip(con.coeffs, best_x)) <= con.rhs
               for con in problem.constraints)
    assert sum(a * v for a, v in zip(problem.cost, best_x)) == best_obj
    return Solution(Status.OPTIMAL,
                    tuple(Fraction(v) for v in best_x),
                    Fraction(best_obj))


def _grid_chunks(ranges: list[np.ndarray]):
    """Yield the cartesian grid in bounded-size row blocks."""
    sizes = [len(r) for r in ranges]
    tail = 1
    split = len(ranges)
    while split > 0 and tail * sizes[split - 1] <= _CHUNK:
        split -= 1
        tail *= sizes[split]
    tail_grid = np.stack([g.ravel() for g in
                          np.meshgrid(*ranges[split:], indexing="ij")], axis=-1) \
        if split < len(ranges) else np.zeros((1, 0), dtype=np.int64)
    if split == 0:
        yield tail_grid
        return
    for head in itertools.product(*(r.tolist() for r in ranges[:split])):
        block = np.empty((tail_grid.shape[0], len(ranges)), dtype=np.int64)
        block[:, :split] = np.array(head, dtype=np.int64)
        block[:, split:] = tail_grid
        yield block


def lp_reference(matrix: Sequence[Sequence], rhs: Sequence) -> list[Fraction]:
    """Exact solve of a square system by fraction Gaussian elimination."""
    n = len(rhs)
    a = [[Fraction(matrix[i][j]) for j in range(n)] + [Fraction(rhs[i])]
         for i in range(n)]
    for col in range(n):
        pivot = max(range(col, n), key=lambda r: abs(a[r][col]))
        if a[pivot][col] == 0:
            raise SingularMatrixError(f"singular at column {col}")
        a[col], a[pivot] = a[pivot], a[col]
        inv = 1 / a[col][col]
        a[col] = [v * inv for v in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                factor = a[r][col]
                a[r] = [v - factor * w for v, w in zip(a[r], a[col])]
    return [a[i][n] for i in range(n)]
