"""Bit-accurate model of the compute-mode L1 array.

Coefficients live in bank rows as two's-complement words; the incoming
variable is applied bit-serially on the read bitlines, one bit per replica
bank per array cycle.  A dot product therefore decomposes into single-bit
AND terms: per 16-column word group a shift-add unit folds the bit lanes
into a partial product, one adder-reduction unit per bank sums the groups,
and a final cross-bank shift-add applies the bit weights.  The arithmetic
here is exact by construction; the model additionally counts the physical
events (bitline discharges, shift-adds, reductions, row activations) that
the cost model prices.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class CacheGeometry:
    banks: int = 16
    rows: int = 256
    cols: int = 256
    word_bits: int = 16
    line_bytes: int = 64
    x_bits: int = 2  # variable bits applied per array cycle (replica banks)

    def __post_init__(self):
        if self.cols % self.word_bits:
            raise ValueError("cols must be divisible by word_bits")
        if self.banks % self.x_bits:
            raise ValueError("banks must be divisible by x_bits")

    @property
    def words_per_row(self) -> int:
        return self.cols // self.word_bits

    @property
    def words_per_line(self) -> int:
        return self.line_bytes * 8 // self.word_bits

    @property
    def bank_groups(self) -> int:
        # replica banks hold identical bits, so capacity shrinks by x_bits
        return self.banks // self.x_bits

    @property
    def capacity_words(self) -> int:
        return self.bank_groups * self.rows * self.words_per_row

    @property
    def capacity_lines(self) -> int:
        return self.capacity_words // self.words_per_line


@dataclass(frozen=True)
class Placement:
    group: int
    row: int
    n_rows: int
    word_offset: int  # global word index in storage order
    n_words: int


@dataclass(frozen=True)
class Mapping:
    placements: tuple[Placement, ...]
    total_words: int
    total_lines: int
    overflow: bool


class BankState:
    """Mutable bit matrices, one per physical bank (rows x cols of 0/1)."""

    def __init__(self, geometry: CacheGeometry):
        self.geometry = geometry
        self.bits = np.zeros((geometry.banks, geometry.rows, geometry.cols),
                             dtype=np.uint8)

    def write_word(self, group: int, row: int, word_slot: int, value: int) -> None:
        g = self.geometry
        enc = value & ((1 << g.word_bits) - 1)  # two's complement
        col0 = word_slot * g.word_bits
        lane = [(enc >> b) & 1 for b in range(g.word_bits)]
        for replica in range(g.x_bits):
            bank = group * g.x_bits + replica
            self.bits[bank, row, col0:col0 + g.word_bits] = lane

    def read_word(self, bank: int, row: int, word_slot: int) -> int:
        g = self.geometry
        col0 = word_slot * g.word_bits
        lane = self.bits[bank, row, col0:col0 + g.word_bits]
        enc = int(sum(int(b) << i for i, b in enumerate(lane)))
        if enc >= 1 << (g.word_bits - 1):
            enc -= 1 << g.word_bits
        return enc


def store_coefficients(rows: Sequence[Sequence[int]],
                       geometry: CacheGeometry,
                       materialize: bool = True) -> tuple[Mapping, BankState | None]:
    """Place constraint rows top-to-bottom, one fresh array row per
    constraint, replicated across the banks of its group.

    Rows that do not fit keep logical placements (the fill model charges
    their movement) but are not materialized; ``overflow`` is flagged.
    """
    g = geometry
    placements: list[Placement] = []
    state = BankState(g) if materialize else None
    row_cursor = 0  # array row index across groups, top to bottom
    word_offset = 0
    overflow = False
    for words in rows:
        n_words = len(words)
        n_rows = max(1, -(-n_words // g.words_per_row))
        group, row_in_group = divmod(row_cursor, g.rows)
        if row_in_group + n_rows > g.rows:
            # constraints never straddle a bank group; skip to the next one
            row_cursor = (group + 1) * g.rows
            group, row_in_group = group + 1, 0
        if group >= g.bank_groups or n_rows > g.rows:
            overflow = True
        placements.append(Placement(min(group, g.bank_groups - 1),
                                    row_in_group, n_rows, word_offset, n_words))
        if state is not None and not overflow:
            for w, value in enumerate(words):
                r, slot = divmod(w, g.words_per_row)
                state.write_word(group, row_in_group + r, slot, int(value))
        row_cursor += n_rows
        word_offset += n_words
    total_lines = max(1, -(-word_offset // g.words_per_line)) if word_offset else 0
    return Mapping(tuple(placements), word_offset, total_lines, overflow), state


def bitcell_and(stored_bit: int, x_bit: int) -> tuple[int, int]:
    """One compute access of a bitcell.

    Returns ``(result, discharge_events)``: the bitline only discharges
    below the sense threshold when both the stored bit and the applied bit
    are 1; that is the single case that costs bitline energy.
    """
    if stored_bit not in (0, 1) or x_bit not in (0, 1):
        raise ValueError("bits must be 0 or 1")
    result = stored_bit & x_bit
    return result, result


@dataclass
class MacEvents:
    rbl_discharge: int = 0
    sa_op: int = 0
    ar_op: int = 0
    row_activate: int = 0
    word_macs: int = 0  # throughput accounting: word-level MAC operations

    def merge(self, other: "MacEvents") -> None:
        self.rbl_discharge += other.rbl_discharge
        self.sa_op += other.sa_op
        self.ar_op += other.ar_op
        self.row_activate += other.row_activate
        self.word_macs += other.word_macs


def row_dot_product(state: BankState, bank: int, row_index: int,
                    x_bit_vector: Sequence[int]) -> tuple[list[int], MacEvents]:
    """Apply one x bit per word of a stored row; latch per-word partials.

    Each 16-column group shift-adds its AND lanes into ``word_value * bit``
    with the sign lane subtracted at MSB weight.
    """
    g = state.geometry
    events = MacEvents(row_activate=1)
    partials: list[int] = []
    for slot, x_bit in enumerate(x_bit_vector):
        if x_bit not in (0, 1):
            raise ValueError("x bits must be 0 or 1")
        value = state.read_word(bank, row_index, slot)
        ones = bin(value & ((1 << g.word_bits) - 1)).count("1")
        events.rbl_discharge += ones if x_bit else 0
        events.sa_op += 1
        partials.append(value * x_bit)
    events.ar_op += 1
    return partials, events


def mac_vector(coeffs: Sequence[int], x_values: Sequence[int],
               geometry: CacheGeometry | None = None,
               x_width: int | None = None) -> tuple[int, MacEvents]:
    """Bit-serial dot product ``sum(coeffs[j] * x[j])``; exact.

    ``x_values`` are integers (fixed-point numerators upstream).  They are
    encoded in two's complement at ``x_width`` bits and applied ``x_bits``
    bits per array cycle across the replica banks; the MSB carries negative
    weight.  Returns the exact integer result and the event counts.
    """
    g = geometry or CacheGeometry()
    c = np.asarray(list(coeffs), dtype=np.int64)
    x = np.asarray(list(x_values), dtype=np.int64)
    if c.shape != x.shape:
        raise ValueError("length mismatch")
    if c.size == 0:
        return 0, MacEvents()
    cap = 1 << (g.word_bits - 1)
    if (np.abs(c) >= cap).any():
        raise ValueError(f"coefficient out of {g.word_bits}-bit range")
    if x_width is None:
        x_width = max(int(np.abs(x).max()).bit_length() + 1, g.x_bits)
    if (x >= 1 << (x_width - 1)).any() or (x < -(1 << (x_width - 1))).any():
        raise ValueError(f"x value out of {x_width}-bit two's complement range")
    x_width = -(-x_width // g.x_bits) * g.x_bits  # round up to whole slices
    slices = x_width // g.x_bits

    xu = x & ((1 << x_width) - 1)
    popcounts = np.array([bin(int(v) & ((1 << g.word_bits) - 1)).count("1")
                          for v in c], dtype=np.int64)
    total = 0
    discharges = 0
    for bit in range(x_width):
        xb = (xu >> bit) & 1
        weight = -(1 << bit) if bit == x_width - 1 else (1 << bit)
        total += weight * int((c * xb).sum())
        discharges += int((popcounts * xb).sum())

    lanes = slices * g.x_bits  # bank-bit lanes engaged
    rows_per_lane = max(1, -(-c.size // g.words_per_row))
    events = MacEvents(
        rbl_discharge=discharges,
        sa_op=c.size * lanes + (lanes - 1),
        ar_op=lanes,
        row_activate=rows_per_lane * lanes,
        word_macs=c.size * slices,
    )
    return int(total), events


def reference_mac(coeffs: Sequence[int], x_values: Sequence[int]) -> int:
    return int(sum(int(a) * int(b) for a, b in zip(coeffs, x_values)))
