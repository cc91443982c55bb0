#!/usr/bin/env python3
"""Error profile of the approximate divider: sweep the mantissa precision,
show how the correction table is populated, and measure the end-to-end
effect on solver iteration counts with and without approximation."""

import argparse
from fractions import Fraction

from spark_sim.divider import DivConfig, build_table, relative_error_sweep
from spark_sim.pim import CacheGeometry
from spark_sim.sle import PimContext, SquareSystem, solve_sle


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--samples", type=int, default=100_000)
    parser.add_argument("--seed", type=int, default=11)
    args = parser.parse_args()

    print(f"{'m_bits':>6} {'mean%':>8} {'median%':>8} {'max%':>8} "
          f"{'corrected buckets':>18}")
    for m_bits in (4, 6, 8, 10, 12):
        cfg = DivConfig(m_bits=m_bits)
        stats = relative_error_sweep(cfg, args.samples, seed=args.seed)
        corrected = sum(1 for e in cfg.bucket_error if e > cfg.error_trigger)
        print(f"{m_bits:>6} {100 * stats['mean']:>8.3f} "
              f"{100 * stats['median']:>8.3f} {100 * stats['max']:>8.2f} "
              f"{corrected:>14}/64")

    table, est = build_table(8)
    print("\ncorrection table (bytes, 8 x 8 leading-bit buckets):")
    for row in range(8):
        print("  " + " ".join(f"{table[row * 8 + col]:>4}" for col in range(8)))

    print("\nsolver iterations, exact vs approximate division:")
    system = SquareSystem((0, 1, 2), (0, 1, 2),
                          ((8, 1, -1), (2, 9, 1), (-1, 2, 11)),
                          (Fraction(12), Fraction(20), Fraction(30)), ())
    for frac_bits in (6, 8, 10):
        exact = solve_sle(system, 1 / (1 << frac_bits), 5000,
                          ctx=PimContext(CacheGeometry(), None, None,
                                         frac_bits=frac_bits))
        approx = solve_sle(system, 1 / (1 << frac_bits), 5000,
                           ctx=PimContext(CacheGeometry(), None, DivConfig(),
                                          frac_bits=frac_bits))
        print(f"  frac_bits={frac_bits}: exact {exact.iterations:>4} iters "
              f"(converged={exact.converged}), approx {approx.iterations:>4} "
              f"iters (converged={approx.converged})")


if __name__ == "__main__":
    main()
