#!/usr/bin/env python3
"""Fill-stall behavior when the working set exceeds the array: sweep the
array size for a fixed instance and compare prefetch on/off."""

import argparse

from spark_sim.driver import SimConfig, run
from spark_sim.generators import gen_random_dense
from spark_sim.pim import CacheGeometry


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=3)
    args = parser.parse_args()

    problem = gen_random_dense(n=5, m=7, seed=args.seed)
    print(f"instance {problem.name}: {problem.n} vars, {problem.m} rows\n")
    print(f"{'rows/bank':>9} {'capacity':>9} {'overflow':>9} "
          f"{'stall(on)':>10} {'stall(off)':>10} {'cycles(on)':>11} "
          f"{'cycles(off)':>11}")
    for rows in (2, 4, 8, 256):
        geometry = CacheGeometry(banks=2, rows=rows, cols=64)
        on = run(problem, SimConfig(geometry=geometry))
        off = run(problem, SimConfig(geometry=geometry,
                                     prefetch_enabled=False))
        assert on.solution == off.solution
        print(f"{rows:>9} {geometry.capacity_lines:>9} "
              f"{str('l1_overflow' in on.flags):>9} "
              f"{on.fill.stall_cycles:>10} {off.fill.stall_cycles:>10} "
              f"{on.ledger.cycles_total():>11} "
              f"{off.ledger.cycles_total():>11}")


if __name__ == "__main__":
    main()
