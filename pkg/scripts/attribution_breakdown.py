#!/usr/bin/env python3
"""Where do the cycles go? Run each instance under the full model, with the
sparse datapath disabled, and with array throughput capped at one op per
cycle, then print the relative contribution of data movement, parallel
compute, and sparsity-aware compute."""

import argparse

from spark_sim.cost import attribution_report
from spark_sim.driver import SimConfig, run
from spark_sim.generators import gen_investment, gen_random_dense
from spark_sim.pim import CacheGeometry


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=5)
    parser.add_argument("--small-array", action="store_true",
                        help="shrink the array so workloads overflow")
    args = parser.parse_args()

    geometry = CacheGeometry(banks=2, rows=4, cols=64) if args.small_array \
        else CacheGeometry()
    configs = {
        "full": SimConfig(geometry=geometry),
        "no_sa": SimConfig(geometry=geometry, sa_enabled=False),
        "serial_pim": SimConfig(geometry=geometry, serial_pim=True),
    }

    instances = []
    for seed in range(args.seeds):
        instances.append(gen_investment(n=4, seed=seed, budget_mode="tight"))
        instances.append(gen_random_dense(seed=seed))

    header = f"{'instance':22} {'full':>8} {'no_sa':>8} {'serial':>8} " \
             f"{'move%':>7} {'par%':>7} {'sparse%':>8}"
    print(header)
    print("-" * len(header))
    for problem in instances:
        runs = {label: run(problem, config)
                for label, config in configs.items()}
        row = attribution_report(runs["full"].cycle_summary(),
                                 runs["no_sa"].cycle_summary(),
                                 runs["serial_pim"].cycle_summary())
        print(f"{problem.name:22} {row['cycles_full']:>8} "
              f"{row['cycles_no_sa']:>8} {row['cycles_serial_pim']:>8} "
              f"{row['pct_data_movement']:>7.1f} "
              f"{row['pct_parallel_compute']:>7.1f} "
              f"{row['pct_sparsity_aware']:>8.1f}")


if __name__ == "__main__":
    main()
