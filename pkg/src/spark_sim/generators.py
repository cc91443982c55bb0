"""Deterministic instance generation.

Three kinds: cardinality-bounded investment instances (sparse by
construction), transportation instances (dense supply/demand structure),
and random dense instances with planted feasibility, a bounding row, and a
dominant pivot per variable so the iterative relaxation behaves.  A fixed
seed reproduces an instance bit for bit.
"""

from __future__ import annotations

import random

from .problem import Constraint, IlpProblem, Sense

KINDS = ("investment", "transportation", "random_dense")


def gen_instance(kind: str, seed: int = 0, **params) -> IlpProblem:
    if kind == "investment":
        return gen_investment(seed=seed, **params)
    if kind == "transportation":
        return gen_transportation(seed=seed, **params)
    if kind == "random_dense":
        return gen_random_dense(seed=seed, **params)
    raise ValueError(f"unknown instance kind {kind!r}; choose from {KINDS}")


def gen_investment(n: int = 3, seed: int = 0,
                   prices: list[int] | None = None,
                   limits: list[int] | None = None,
                   budget: int | None = None,
                   incomes: list[int] | None = None,
                   extra_rows: int = 0,
                   budget_mode: str | None = None) -> IlpProblem:
    """Maximize income from up to ``limits`` units per asset under a budget.

    ``n`` per-asset cap rows plus one budget row (plus optional extra slack
    resource rows), so the instance routes to the sparsity-aware path.  The
    budget is drawn in one of three shapes unless given explicitly: "slack"
    (the cap corner fits), "tight" (short by at most the cheapest price, so
    dropping a single unit restores feasibility), "hard" (short by more).
    """
    rng = random.Random(f"investment:{seed}")
    if prices is None:
        prices = [rng.randint(1, 9) for _ in range(n)]
    if limits is None:
        limits = [rng.randint(1, 6) for _ in range(n)]
    if incomes is None:
        incomes = [rng.randint(1, 9) for _ in range(n)]
    if len(prices) != n or len(limits) != n or len(incomes) != n:
        raise ValueError("prices/limits/incomes must have length n")
    if budget is None:
        corner_cost = sum(p * b for p, b in zip(prices, limits))
        mode = budget_mode or rng.choices(
            ["slack", "tight", "hard"], weights=[45, 45, 10])[0]
        if mode == "slack":
            budget = corner_cost + rng.randint(0, 10)
        elif mode == "tight":
            budget = corner_cost - rng.randint(1, min(prices))
        elif mode == "hard":
            budget = max(min(prices), corner_cost - rng.randint(
                min(prices) + 1, max(2 * max(prices), min(prices) + 2)))
        else:
            raise ValueError(f"unknown budget_mode {budget_mode!r}")
    if budget <= 0:
        raise ValueError("budget must be positive")
    rows = [Constraint(tuple(1 if j == k else 0 for j in range(n)), limits[k])
            for k in range(n)]
    rows.append(Constraint(tuple(prices), budget))
    for _ in range(extra_rows):
        use = [rng.randint(0, 5) for _ in range(n)]
        slack_rhs = sum(u * b for u, b in zip(use, limits)) + rng.randint(0, 8)
        rows.append(Constraint(tuple(use), slack_rhs))
    return IlpProblem(tuple(incomes), tuple(rows), Sense.MAX, integral=True,
                      name=f"investment-{seed}")


def gen_transportation(sources: int = 2, dests: int = 3, seed: int = 0,
                       supplies: list[int] | None = None,
                       demands: list[int] | None = None) -> IlpProblem:
    """Minimize shipping cost from sources to destinations.

    Variables are the flattened source x destination shipment counts;
    supply rows cap each source, demand rows force each destination
    (``>=`` rewritten canonically).  Infeasible supply/demand totals are
    rejected.
    """
    rng = random.Random(f"transportation:{seed}")
    if demands is None:
        demands = [rng.randint(1, 6) for _ in range(dests)]
    if supplies is None:
        supplies = [rng.randint(1, 6) for _ in range(sources)]
        shortfall = sum(demands) - sum(supplies)
        if shortfall > 0:  # pad deterministically so the instance is solvable
            for i in range(sources):
                supplies[i] += shortfall // sources + (i < shortfall % sources)
    if len(supplies) != sources or len(demands) != dests:
        raise ValueError("supplies/demands length mismatch")
    if sum(supplies) < sum(demands):
        raise ValueError("total supply is less than total demand")
    n = sources * dests
    var = lambda i, j: i * dests + j
    rows = []
    for i in range(sources):
        coeffs = [0] * n
        for j in range(dests):
            coeffs[var(i, j)] = 1
        rows.append(Constraint(tuple(coeffs), supplies[i]))
    for j in range(dests):
        coeffs = [0] * n
        for i in range(sources):
            coeffs[var(i, j)] = -1  # sum of inflows >= demand
        rows.append(Constraint(tuple(coeffs), -demands[j]))
    cost = tuple(rng.randint(1, 9) for _ in range(n))
    return IlpProblem(cost, tuple(rows), Sense.MIN, integral=True,
                      name=f"transportation-{seed}")


def gen_random_dense(n: int | None = None, m: int | None = None, seed: int = 0,
                     coeff_cap: int = 9, box_cap: int = 8,
                     integral: bool = True) -> IlpProblem:
    """Random dense instance: feasible by a planted point, bounded by an
    all-ones row, one strong pivot per variable."""
    rng = random.Random(f"random-dense:{seed}")
    if n is None:
        n = rng.randint(2, 5)
    if m is None:
        m = rng.randint(n + 1, min(n + 3, 7))
    if m < n:
        raise ValueError("need at least as many rows as variables")
    planted = [rng.randint(0, 1) for _ in range(n)]
    head = sum(planted)
    rows = [Constraint(tuple([1] * n),
                       min(head + rng.randint(1, max(1, box_cap - head)), box_cap))]
    # one strong pivot per variable when the row budget allows; with m == n
    # the bounding row has to serve as somebody's pivot
    positions = list(range(n))
    rng.shuffle(positions)
    positions = positions[:m - 1]
    positions += [rng.randrange(n) for _ in range(m - 1 - len(positions))]
    strong_lo = max(2, coeff_cap - 4)
    for p in positions:
        row = [rng.choice([-1, 0, 1]) for _ in range(n)]
        row[p] = rng.randint(strong_lo, coeff_cap) * rng.choice([1, -1])
        if sum(1 for c in row if c) < 2:  # keep every row genuinely dense
            other = rng.choice([j for j in range(n) if j != p])
            row[other] = rng.choice([-1, 1])
        rhs = sum(c * x for c, x in zip(row, planted)) + rng.randint(0, 9)
        rows.append(Constraint(tuple(row), rhs))
    cost = tuple(rng.choice([c for c in range(-coeff_cap, coeff_cap + 1) if c])
                 for _ in range(n))
    sense = rng.choice([Sense.MAX, Sense.MIN])
    return IlpProblem(cost, tuple(rows), sense, integral=integral,
                      name=f"random-dense-{seed}")


def dense_suite(count: int = 200, seed0: int = 0) -> list[IlpProblem]:
    return [gen_random_dense(seed=seed0 + k) for k in range(count)]


def sparse_suite(count: int = 200, seed0: int = 0) -> list[IlpProblem]:
    suite = []
    for k in range(count):
        rng = random.Random(f"sparse-suite:{seed0 + k}")
        n = rng.randint(2, 5)
        extra = 1 if rng.random() < 0.4 else 0
        suite.append(gen_investment(n=n, seed=seed0 + k, extra_rows=extra))
    return suite
