"""Cycle and energy accounting.

Energy is tracked in integer tenths of femtojoules (1 pJ = 10_000 units) so
component sums are exact; totals are reported in picojoules.  Every modeled
event maps to one kind below; cycle cost is charged per semantic batch with
a per-kind throughput cap (the parallel array retires 32 word-MACs per
cycle, the serial-throughput experiment caps that at 1).
"""

from __future__ import annotations

from dataclasses import dataclass

E_UNITS_PER_PJ = 10_000

EVENT_KINDS = (
    "rbl_discharge", "row_activate", "sa_op", "ar_op",
    "sub_op", "div_op", "queue_rw", "line_fill_l2", "line_fill_dram",
)

# ledger component <- event kinds
COMPONENTS = {
    "pim_compute": ("rbl_discharge", "row_activate"),
    "shift_add_ar": ("sa_op", "ar_op"),
    "sub_div": ("sub_op", "div_op"),
    "queues": ("queue_rw",),
    "l2_to_l1": ("line_fill_l2",),
    "dram_to_l2": ("line_fill_dram",),
}

PHASES = ("fetch_detect", "sa", "sle", "bnb", "fill_stall")


@dataclass(frozen=True)
class CostConfig:
    clock_ns: float = 2.0
    sram_latency_ns: float = 2.0
    move_pj_per_bit: float = 1.0
    rbl_cap_f: float = 40e-15
    read_cap_f: float = 35e-15
    vdd: float = 1.0
    sense_swing: float = 0.5        # fraction of vdd seen by the sense stage
    div_pj: float = 0.15
    div_ns: float = 0.5
    l2_bytes: int = 4 * 1024 * 1024
    dram_bytes: int = 2 * 1024 * 1024 * 1024
    line_bytes: int = 64
    prefetch_stride_lines: int = 2
    l2_latency_ns: float = 10.0     # estimate, not a measured value
    dram_latency_ns: float = 100.0  # estimate, not a measured value
    dram_move_factor: float = 10.0  # off-chip movement premium per bit
    # near-memory logic per-op estimates (synthesis-style constants)
    sa_op_pj: float = 0.05
    ar_op_pj: float = 0.08
    sub_op_pj: float = 0.05
    queue_rw_pj: float = 0.03
    mac_throughput: int = 32        # word-MACs retired per cycle
    alu_throughput: int = 16        # sub/queue ops retired per cycle

    def __post_init__(self):
        for name in ("clock_ns", "move_pj_per_bit", "rbl_cap_f", "read_cap_f",
                     "vdd", "div_pj", "l2_bytes", "dram_bytes", "line_bytes",
                     "mac_throughput", "alu_throughput"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")

    def rbl_event_pj(self) -> float:
        # half-swing charge: C * Vdd * (Vdd * swing)
        return self.rbl_cap_f * self.vdd * (self.vdd * self.sense_swing) * 1e12

    def row_activate_pj(self) -> float:
        bits = self.line_bytes * 8
        return self.read_cap_f * self.vdd * (self.vdd * self.sense_swing) * 1e12 * bits

    def line_fill_l2_pj(self) -> float:
        return self.move_pj_per_bit * self.line_bytes * 8

    def line_fill_dram_pj(self) -> float:
        return self.move_pj_per_bit * self.dram_move_factor * self.line_bytes * 8

    def event_units(self, kind: str) -> int:
        pj = {
            "rbl_discharge": self.rbl_event_pj(),
            "row_activate": self.row_activate_pj(),
            "sa_op": self.sa_op_pj,
            "ar_op": self.ar_op_pj,
            "sub_op": self.sub_op_pj,
            "div_op": self.div_pj,
            "queue_rw": self.queue_rw_pj,
            "line_fill_l2": self.line_fill_l2_pj(),
            "line_fill_dram": self.line_fill_dram_pj(),
        }[kind]
        return round(pj * E_UNITS_PER_PJ)

    def l2_latency_cycles(self) -> int:
        return max(1, -(-int(self.l2_latency_ns * 10) // int(self.clock_ns * 10)))

    def dram_latency_cycles(self) -> int:
        return max(1, -(-int(self.dram_latency_ns * 10) // int(self.clock_ns * 10)))


def rbl_energy(events: int, config: CostConfig | None = None) -> float:
    """Picojoules for a number of bitline discharge events."""
    cfg = config or CostConfig()
    return events * cfg.event_units("rbl_discharge") / E_UNITS_PER_PJ


class Ledger:
    """Per-phase cycle counters and per-event energy counters.

    ``total == sum of components`` holds exactly in both currencies because
    everything is integer arithmetic.
    """

    def __init__(self, config: CostConfig, serial_pim: bool = False):
        self.config = config
        self.serial_pim = serial_pim
        self.events: dict[str, int] = {k: 0 for k in EVENT_KINDS}
        self.cycles: dict[str, int] = {p: 0 for p in PHASES}
        self.word_macs = 0  # array MAC activity; throughput, not energy
        self._phase = "fetch_detect"

    # -- phases ------------------------------------------------------------
    def set_phase(self, phase: str) -> None:
        if phase not in PHASES:
            raise ValueError(f"unknown phase {phase!r}")
        self._phase = phase

    @property
    def phase(self) -> str:
        return self._phase

    def add_cycles(self, count: int, phase: str | None = None) -> None:
        if count < 0:
            raise ValueError("negative cycles")
        self.cycles[phase or self._phase] += int(count)

    # -- events ------------------------------------------------------------
    def record(self, kind: str, count: int = 1) -> None:
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {kind!r}")
        if count < 0:
            raise ValueError("negative event count")
        self.events[kind] += int(count)

    def charge_mac(self, events, phase: str | None = None) -> None:
        """Record one MAC batch (from the array model) and its cycles."""
        self.record("rbl_discharge", events.rbl_discharge)
        self.record("sa_op", events.sa_op)
        self.record("ar_op", events.ar_op)
        self.record("row_activate", events.row_activate)
        self.word_macs += events.word_macs
        throughput = 1 if self.serial_pim else self.config.mac_throughput
        self.add_cycles(-(-events.word_macs // throughput) if events.word_macs else 0,
                        phase)

    def charge_alu(self, kind: str, count: int, phase: str | None = None) -> None:
        """Record sub/queue-style ops; cycles by ALU throughput."""
        self.record(kind, count)
        if count:
            self.add_cycles(-(-count // self.config.alu_throughput), phase)

    def charge_div(self, count: int = 1, phase: str | None = None) -> None:
        self.record("div_op", count)
        self.add_cycles(count, phase)  # single-cycle divider

    # -- reporting ----------------------------------------------------------
    def energy_units_by_component(self) -> dict[str, int]:
        return {
            comp: sum(self.events[k] * self.config.event_units(k) for k in kinds)
            for comp, kinds in COMPONENTS.items()
        }

    def energy_units_total(self) -> int:
        return sum(self.energy_units_by_component().values())

    def energy_pj_by_component(self) -> dict[str, float]:
        return {comp: units / E_UNITS_PER_PJ
                for comp, units in self.energy_units_by_component().items()}

    def energy_pj_total(self) -> float:
        return self.energy_units_total() / E_UNITS_PER_PJ

    def cycles_total(self) -> int:
        return sum(self.cycles.values())

    def merge(self, other: "Ledger") -> None:
        for k, v in other.events.items():
            self.events[k] += v
        for p, v in other.cycles.items():
            self.cycles[p] += v
        self.word_macs += other.word_macs

    def as_dict(self) -> dict:
        return {
            "cycles": dict(self.cycles),
            "cycles_total": self.cycles_total(),
            "events": dict(self.events),
            "word_macs": self.word_macs,
            "energy_pj_by_component": self.energy_pj_by_component(),
            "energy_pj_total": self.energy_pj_total(),
        }


# ---------------------------------------------------------------------------
# fill model

@dataclass
class FillResult:
    stall_cycles: int = 0
    fills_l2: int = 0
    fills_dram: int = 0


def simulate_fill(total_lines: int, capacity_lines: int,
                  access_schedule: list[tuple[int, int]],
                  config: CostConfig, prefetch: bool = True,
                  footprint_bytes: int | None = None) -> FillResult:
    """Walk a deterministic top-to-bottom line access schedule.

    ``access_schedule`` is ``[(line_id, compute_cycles), ...]`` in access
    order.  Lines are fetched ahead with a fixed stride when prefetch is on;
    the victim is always the least recently computed resident line.  A stall
    accrues only when the needed line is neither resident nor already in
    flight far enough along; fills land through the decoupled write port so
    compute on resident lines overlaps them.
    """
    capacity_lines = max(1, capacity_lines)
    if total_lines <= capacity_lines:
        return FillResult()
    footprint = footprint_bytes if footprint_bytes is not None \
        else total_lines * config.line_bytes
    from_dram = footprint > config.l2_bytes
    latency = config.dram_latency_cycles() if from_dram \
        else config.l2_latency_cycles()

    resident: dict[int, int] = {}   # line -> last computed timestamp
    in_flight: dict[int, int] = {}  # line -> fill completion time
    result = FillResult()
    now = 0
    stamp = 0

    def issue(line: int) -> None:
        if line in resident or line in in_flight:
            return
        in_flight[line] = now + latency
        if from_dram:
            result.fills_dram += 1
        else:
            result.fills_l2 += 1

    def land(line: int) -> None:
        # the write port is decoupled, so landing never blocks compute;
        # victim is the least recently computed resident line
        while resident and len(resident) >= capacity_lines:
            victim = min(resident, key=resident.__getitem__)
            del resident[victim]
        resident[line] = stamp

    # warm start: the array was preloaded top to bottom
    for line in range(min(capacity_lines, total_lines)):
        resident[line] = stamp
        stamp += 1

    upcoming = [line for line, _ in access_schedule]
    for idx, (line, compute_cycles) in enumerate(access_schedule):
        if prefetch:
            for ahead in range(1, config.prefetch_stride_lines + 1):
                if idx + ahead < len(upcoming):
                    issue(upcoming[idx + ahead])
        if line not in resident:
            if line not in in_flight:
                issue(line)  # demand miss pays whatever latency remains
            ready = in_flight.pop(line)
            if ready > now:
                result.stall_cycles += ready - now
                now = ready
            land(line)
        resident[line] = stamp
        stamp += 1
        now += compute_cycles
        for other in [l for l, t in in_flight.items() if t <= now]:
            del in_flight[other]
            land(other)
    return result


# ---------------------------------------------------------------------------
# attribution

def attribution_report(full: dict, no_sa: dict, serial_pim: dict) -> dict:
    """Relative contribution of the three speedup factors.

    Inputs are cycle summaries of the same instance under three configs.
    Sparsity-aware contribution is the cycle delta when the sparse datapath
    is disabled; parallel-compute is the delta when array throughput is
    capped at one op per cycle; data movement is the full run's fill and
    stall share.  Percentages are normalized over the three contributions.
    """
    for other in (no_sa, serial_pim):
        if other["instance"] != full["instance"]:
            raise ValueError("attribution runs must share one instance")
    c_full = full["cycles_total"]
    sa_delta = max(no_sa["cycles_total"] - c_full, 0)
    par_delta = max(serial_pim["cycles_total"] - c_full, 0)
    move = full.get("cycles_fill_stall", 0) + full.get("fill_cycles", 0)
    total = sa_delta + par_delta + move
    if total == 0:
        shares = {"data_movement": 0.0, "parallel_compute": 0.0,
                  "sparsity_aware": 0.0}
    else:
        shares = {
            "data_movement": 100.0 * move / total,
            "parallel_compute": 100.0 * par_delta / total,
            "sparsity_aware": 100.0 * sa_delta / total,
        }
    return {
        "instance": full["instance"],
        "cycles_full": c_full,
        "cycles_no_sa": no_sa["cycles_total"],
        "cycles_serial_pim": serial_pim["cycles_total"],
        **{f"pct_{k}": v for k, v in shares.items()},
    }
