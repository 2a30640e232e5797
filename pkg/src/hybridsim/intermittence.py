"""Power-failure schedules, the CONF-priority backup, and power-on.

Failure points are instruction positions in the trace. Each point fires once,
between records, when execution has completed at least that many
instructions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from enum import Enum

from .core import Region, Tech, TechnologyParams
from .policy import Event, EventKind, HybridCache
from .rng import SplitMix64


class FailureMode(Enum):
    NONE = "none"
    PERIODIC = "periodic"
    RANDOM = "random"


@dataclass(frozen=True)
class FailureSchedule:
    mode: FailureMode = FailureMode.NONE
    period: int = 0
    lo: int = 0
    hi: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.mode == FailureMode.PERIODIC and self.period < 1:
            raise ValueError("periodic failure period must be >= 1")
        if self.mode == FailureMode.RANDOM and not 1 <= self.lo <= self.hi:
            raise ValueError("random failures need 1 <= lo <= hi")

    @classmethod
    def none(cls):
        return cls()

    @classmethod
    def periodic(cls, period: int):
        return cls(FailureMode.PERIODIC, period=period)

    @classmethod
    def random_uniform(cls, lo: int, hi: int, seed: int = 0):
        return cls(FailureMode.RANDOM, lo=lo, hi=hi, seed=seed)

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "FailureSchedule":
        """``none``, ``period:N`` or ``random:LO:HI``."""
        parts = text.strip().split(":")
        try:
            if parts == ["none"]:
                return cls.none()
            if parts[0] == "period" and len(parts) == 2:
                return cls.periodic(int(parts[1]))
            if parts[0] == "random" and len(parts) == 3:
                return cls.random_uniform(int(parts[1]), int(parts[2]), seed)
        except ValueError as exc:
            raise ValueError(f"bad failure schedule {text!r}: {exc}") from None
        raise ValueError(f"bad failure schedule {text!r}")

    def label(self) -> str:
        if self.mode == FailureMode.PERIODIC:
            return f"period:{self.period}"
        if self.mode == FailureMode.RANDOM:
            return f"random:{self.lo}:{self.hi}"
        return "none"

    def points(self):
        """Infinite ascending generator of failure positions (empty for NONE)."""
        if self.mode == FailureMode.PERIODIC:
            k = 1
            while True:
                yield k * self.period
                k += 1
        elif self.mode == FailureMode.RANDOM:
            rng = SplitMix64(self.seed)
            at = 0
            while True:
                at += rng.randint(self.lo, self.hi)
                yield at


def next_failure(schedule: FailureSchedule, after_instruction: int):
    """First failure position strictly after ``after_instruction``, or None."""
    if schedule.mode == FailureMode.NONE:
        return None
    if schedule.mode == FailureMode.PERIODIC:
        return (after_instruction // schedule.period + 1) * schedule.period
    for p in schedule.points():
        if p > after_instruction:
            return p


def failure_points(schedule: FailureSchedule, total_instructions: int) -> list[int]:
    """All failure positions in [1, total_instructions]."""
    out = []
    for p in schedule.points():
        if p > total_instructions:
            break
        out.append(p)
    return out


@dataclass
class BackupReport:
    n_w_l1: int
    n_w_main: int
    backup_cycles: int
    backup_time_ns: Decimal
    events: list = field(default_factory=list, repr=False)

    @property
    def eta(self):
        total = self.n_w_l1 + self.n_w_main
        return self.n_w_l1 / total if total else None


def _report(events, tech: TechnologyParams) -> BackupReport:
    n_l1 = sum(1 for e in events if e.tech == Tech.STTRAM)
    n_main = sum(1 for e in events if e.tech == Tech.PCM)
    cycles = n_l1 * tech.sttram.write_cycles + n_main * tech.pcm.write_cycles
    return BackupReport(n_l1, n_main, cycles, cycles * Decimal(tech.clock_period_ns), events)


def _drop(cache: HybridCache, set_index: int, way: int, events, write_clean: bool):
    b = cache.sets[set_index][way]
    if b.dirty or write_clean:
        addr = cache.block_address(set_index, way)
        events.append(Event(EventKind.WRITEBACK, Tech.PCM, addr, b.content))
        cache.store(addr, b.content)
    b.clear()


def backup(state: HybridCache, tech: TechnologyParams | None = None,
           write_clean: bool = False) -> BackupReport:
    """Save the SRAM region of the proposed cache at a power failure.

    Per set, SRAM blocks go in order of CONF (high first), then WIC (high
    first), then way index. Each one takes a free STT-RAM way, or else
    displaces the lowest-CONF STT-RAM block not placed during this backup as
    long as its own CONF is at least as high. Displaced and unplaced blocks
    reach PCM only if dirty (or always, with ``write_clean``). Saved blocks
    keep dirty bit, content and CONF; RIC and WIC restart from zero.
    """
    tech = tech or TechnologyParams()
    geo = state.geometry
    sram = list(geo.region_ways(Region.SRAM))
    stt = list(geo.region_ways(Region.STTRAM))
    events = []
    for set_index, blocks in enumerate(state.sets):
        order = sorted((w for w in sram if blocks[w].valid),
                       key=lambda w: (-blocks[w].conf, -blocks[w].wic, w))
        placed = set()
        for w in order:
            src = blocks[w]
            dst = next((v for v in stt if not blocks[v].valid), None)
            if dst is None:
                candidates = [v for v in stt if v not in placed]
                if not candidates:
                    continue
                victim = min(candidates, key=lambda v: (blocks[v].conf, v))
                if src.conf < blocks[victim].conf:
                    continue
                _drop(state, set_index, victim, events, write_clean)
                dst = victim
            addr = state.block_address(set_index, w)
            events.append(Event(EventKind.SAVE, Tech.STTRAM, addr, src.content))
            moved = blocks[dst]
            moved.valid, moved.dirty, moved.tag = True, src.dirty, src.tag
            moved.content, moved.conf = src.content, src.conf
            moved.ric = moved.wic = 0
            placed.add(dst)
            src.clear()
        for w in sram:
            if blocks[w].valid:
                _drop(state, set_index, w, events, write_clean)
    return _report(events, tech)


def backup_everything(state: HybridCache, tech: TechnologyParams | None = None,
                      write_clean: bool = False) -> BackupReport:
    """Baseline failure handling: dirty SRAM blocks go to PCM, SRAM is lost, STT-RAM stays."""
    tech = tech or TechnologyParams()
    events = []
    for set_index, blocks in enumerate(state.sets):
        for w in state.geometry.region_ways(Region.SRAM):
            if blocks[w].valid:
                _drop(state, set_index, w, events, write_clean)
    return _report(events, tech)


def power_on(state: HybridCache, persist_prediction: bool = False):
    """Resume after a failure: STT-RAM is used as-is, the prediction table starts over."""
    for blocks in state.sets:
        for w in state.geometry.region_ways(Region.SRAM):
            blocks[w].clear()
    if state.uses_prediction and not persist_prediction:
        state.prediction.reset()
