"""Approximate division by leading-mantissa subtraction plus a shared
64-entry correction table.

Both operands are normalized to ``mantissa * 2^exp`` with the mantissa in
``[1, 2)``.  The quotient mantissa is estimated in the log domain: with the
top ``m_bits`` fraction bits of each mantissa, ``log2(ma/mb) ~ (fa - fb)``,
and the antilog is linearized piecewise (a halving renormalizes the negative
branch).  Each of the 64 (3+3 leading-bit) operand buckets precomputes the
mean residual of that estimate; buckets whose expected relative error
exceeds the trigger add their correction to the estimate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import frexp

import numpy as np

TABLE_SIZE = 64
# corrections are stored byte-sized: signed 8 bits scaled by 2^-9
_CORR_SCALE = 512


def _mantissa_estimate(fa: int, fb: int, m_bits: int) -> float:
    q = 1 << m_bits
    d = fa - fb
    if d >= 0:
        return 1.0 + d / q
    return 1.0 + d / (2.0 * q)  # 2^d ~ (2 + d) / 2 for d in (-1, 0)


def build_table(m_bits: int, error_trigger: float = 0.01
                ) -> tuple[tuple[int, ...], tuple[float, ...]]:
    """Per-bucket byte corrections and expected relative errors.

    Sampled over every ``(fa, fb)`` pair of the bucket at ``m_bits``
    resolution (exhaustive through 12 bits, strided to 512 points per axis
    beyond that).  Buckets whose expected error stays under the trigger
    store a zero: their correction would never be applied.  Deterministic:
    same parameters, same bytes.
    """
    q = 1 << m_bits
    width = q // 8
    stride = max(1, width // 512)
    corrections = []
    estimates = []
    for ia in range(8):
        for ib in range(8):
            fa = np.arange(ia * width, (ia + 1) * width, stride, dtype=np.int64)
            fb = np.arange(ib * width, (ib + 1) * width, stride, dtype=np.int64)
            d = fa[:, None] - fb[None, :]
            approx = np.where(d >= 0, 1.0 + d / q, 1.0 + d / (2.0 * q))
            true = (1.0 + fa / q)[:, None] / (1.0 + fb / q)[None, :]
            resid = true - approx
            estimate = float((np.abs(resid) / true).mean())
            estimates.append(estimate)
            corrections.append(0 if estimate <= error_trigger
                               else int(round(float(resid.mean()) * _CORR_SCALE)))
    return tuple(corrections), tuple(estimates)


@dataclass(frozen=True)
class DivConfig:
    m_bits: int = 8
    error_trigger: float = 0.01
    table: tuple[int, ...] = field(default=(), repr=False)
    bucket_error: tuple[float, ...] = field(default=(), repr=False)

    def __post_init__(self):
        if not 4 <= self.m_bits <= 16:
            raise ValueError("m_bits must be in [4, 16]")
        if not self.table:
            table, est = build_table(self.m_bits, self.error_trigger)
            object.__setattr__(self, "table", table)
            object.__setattr__(self, "bucket_error", est)
        if len(self.table) != TABLE_SIZE:
            raise ValueError(f"table must have exactly {TABLE_SIZE} entries")


DEFAULT_DIV = DivConfig()


def approx_divide(a: float, b: float, config: DivConfig = DEFAULT_DIV) -> float:
    """Approximate ``a / b``; sign is handled exactly, magnitude via the
    log-domain estimate with table correction."""
    if b == 0:
        raise ZeroDivisionError("division by zero")
    if a == 0:
        return 0.0
    sign = -1.0 if (a < 0) != (b < 0) else 1.0
    ma, ea = frexp(abs(a))  # ma in [0.5, 1)
    mb, eb = frexp(abs(b))
    if mb == 0.5:  # power-of-two divisor: exponent-only path, exact
        return sign * ma * 2.0 ** (ea - eb + 1)
    m_bits = config.m_bits
    q = 1 << m_bits
    fa = int((2.0 * ma - 1.0) * q)  # top m_bits of the fraction
    fb = int((2.0 * mb - 1.0) * q)
    mant = _mantissa_estimate(fa, fb, m_bits)
    bucket = ((fa >> (m_bits - 3)) << 3) | (fb >> (m_bits - 3))
    if config.bucket_error[bucket] > config.error_trigger:
        mant += config.table[bucket] / _CORR_SCALE
    return sign * mant * 2.0 ** (ea - eb)


def relative_error_sweep(config: DivConfig, samples: int, seed: int = 0,
                         lo: float = -1000.0, hi: float = 1000.0) -> dict:
    """Measured error statistics of the divider against exact division."""
    rng = np.random.default_rng(seed)
    a = rng.uniform(lo, hi, samples)
    b = rng.uniform(lo, hi, samples)
    b[np.abs(b) < 1e-9] = 1.0
    errs = np.empty(samples)
    sign_ok = True
    for i in range(samples):
        exact = a[i] / b[i]
        got = approx_divide(float(a[i]), float(b[i]), config)
        if got != 0.0 and (got > 0) != (exact > 0):
            sign_ok = False
        errs[i] = abs(got - exact) / abs(exact)
    return {
        "mean": float(errs.mean()),
        "median": float(np.median(errs)),
        "max": float(errs.max()),
        "sign_always_correct": sign_ok,
    }
