"""Cycle and energy accounting.

The ledger counts reads and writes per (phase, technology). Energies are
integers in 1e-6 pJ units, so the overall-energy identity holds exactly.
End-of-run flush traffic is counted in its own phase and kept out of every
reported metric.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from decimal import ROUND_HALF_EVEN, Decimal, localcontext
from enum import IntEnum
from fractions import Fraction

from .core import CacheGeometry, Region, Tech, TechnologyParams

LEAKAGE_REFERENCE_BYTES = 16 * 1024


class Phase(IntEnum):
    EXEC = 0
    BACKUP = 1
    RESTORE = 2
    FLUSH = 3


READ, WRITE = 0, 1


class EnergyLedger:
    def __init__(self, tech: TechnologyParams | None = None):
        self.tech = tech or TechnologyParams()
        self.counts = [[[0, 0] for _ in Tech] for _ in Phase]
        self.energy = [0] * len(Phase)
        self.cycles = 0
        self.gap_instructions = 0
        self._lat = self.tech.latency_table()
        self._nrg = self.tech.energy_table()

    @classmethod
    def from_counts(cls, tech, counts, gap_instructions=0) -> "EnergyLedger":
        """Rebuild a ledger from a [phase][tech][op] count array."""
        led = cls(tech)
        for ph in Phase:
            for t in Tech:
                for op in (READ, WRITE):
                    n = int(counts[ph][t][op])
                    if n:
                        led._add(ph, t, op, n)
        led.tally_gap(gap_instructions)
        return led

    def _add(self, phase, tech, op, n=1):
        self.counts[phase][tech][op] += n
        self.energy[phase] += n * self._nrg[tech][op]
        if phase != Phase.FLUSH:
            self.cycles += n * self._lat[tech][op]

    def tally(self, event, phase: Phase = Phase.EXEC):
        self._add(phase, event.tech, WRITE if event.kind.is_write else READ)

    def tally_gap(self, n: int):
        """Non-memory instructions: one cycle each, no dynamic energy."""
        self.gap_instructions += n
        self.cycles += n

    def recompute_cycles(self) -> int:
        total = self.gap_instructions
        for ph in (Phase.EXEC, Phase.BACKUP, Phase.RESTORE):
            for t in Tech:
                for op in (READ, WRITE):
                    total += self.counts[ph][t][op] * self._lat[t][op]
        return total

    @property
    def e_exec(self):
        return self.energy[Phase.EXEC]

    @property
    def e_backup(self):
        return self.energy[Phase.BACKUP]

    @property
    def e_restore(self):
        return self.energy[Phase.RESTORE]

    @property
    def e_flush(self):
        return self.energy[Phase.FLUSH]

    @property
    def e_overall(self):
        return self.e_exec + self.e_backup + self.e_restore

    @property
    def n_w_l1(self):
        return self.counts[Phase.BACKUP][Tech.STTRAM][WRITE]

    @property
    def n_w_main(self):
        return self.counts[Phase.BACKUP][Tech.PCM][WRITE]

    @property
    def n_r_l1(self):
        return self.counts[Phase.RESTORE][Tech.STTRAM][READ]

    @property
    def n_r_main(self):
        return self.counts[Phase.RESTORE][Tech.PCM][READ]

    def total(self, tech: Tech, op: int) -> int:
        return sum(self.counts[ph][tech][op] for ph in (Phase.EXEC, Phase.BACKUP, Phase.RESTORE))


def tally(ledger: EnergyLedger, event, phase: Phase = Phase.EXEC):
    ledger.tally(event, phase)


@dataclass
class RunReport:
    architecture: str
    trace: str
    config_fingerprint: str
    version: str
    records: int
    instructions: int
    cycles: int
    exec_time_ns: Decimal
    e_exec: int
    e_backup: int
    e_restore: int
    e_overall: int
    e_normal: int | None
    eta: float | None
    theta: float | None
    static_energy_pj: Decimal
    avg_backup_time_ns: Decimal | None
    failures: int
    backup_episodes: int
    n_w_l1: int
    n_w_main: int
    n_r_l1: int
    n_r_main: int
    sram_reads: int
    sram_writes: int
    sttram_reads: int
    sttram_writes: int
    pcm_reads: int
    pcm_writes: int
    hits_sram: int
    hits_sttram: int
    misses: int
    migrations_to_sttram: int
    migrations_to_sram: int
    sttram_write_ratio: float | None
    gap_instructions: int
    safe_points: int
    rewinds: int
    reexecuted_records: int
    flush_writebacks: int
    e_flush: int

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]


def static_energy(tech: TechnologyParams, geo: CacheGeometry, run_duration_ns) -> Decimal:
    """Leakage energy in pJ, scaled linearly from the 16 KB figures by region capacity."""
    total = Fraction(0)
    dur = Fraction(Decimal(run_duration_ns))
    for region, spec in ((Region.SRAM, tech.sram), (Region.STTRAM, tech.sttram)):
        cap = geo.region_capacity(region)
        # uW * ns = 1e-15 J = 1e-3 pJ
        total += Fraction(spec.leakage_uw) * Fraction(cap, LEAKAGE_REFERENCE_BYTES) * dur / 1000
    with localcontext() as ctx:
        ctx.prec = 60
        value = Decimal(total.numerator) / Decimal(total.denominator)
        return value.quantize(Decimal("0.000001"), rounding=ROUND_HALF_EVEN)


def _ratio(num, den):
    return float(Fraction(num, den)) if den else None


def finalize(ledger: EnergyLedger, e_normal: int | None = None, run_duration_ns=None,
             geo: CacheGeometry | None = None, *, stats: dict | None = None,
             architecture: str = "", trace: str = "", fingerprint: str = "",
             version: str = "") -> RunReport:
    """Turn a completed ledger plus run counters into a :class:`RunReport`."""
    stats = dict(stats or {})
    tech = ledger.tech
    geo = geo or CacheGeometry()
    clock = Decimal(tech.clock_period_ns)
    exec_time = ledger.cycles * clock
    duration = exec_time if run_duration_ns is None else Decimal(run_duration_ns)
    episodes = stats.get("backup_episodes", 0)
    backup_cycles = sum(ledger.counts[Phase.BACKUP][t][op] * ledger._lat[t][op]
                        for t in Tech for op in (READ, WRITE))
    if episodes:
        with localcontext() as ctx:
            ctx.prec = 40
            avg_backup = backup_cycles * clock / episodes
    else:
        avg_backup = None
    exec_writes = sum(ledger.counts[Phase.EXEC][t][WRITE] for t in (Tech.SRAM, Tech.STTRAM))
    e_overall = ledger.e_overall
    return RunReport(
        architecture=architecture,
        trace=trace,
        config_fingerprint=fingerprint,
        version=version,
        records=stats.get("records", 0),
        instructions=stats.get("instructions", 0),
        cycles=ledger.cycles,
        exec_time_ns=exec_time,
        e_exec=ledger.e_exec,
        e_backup=ledger.e_backup,
        e_restore=ledger.e_restore,
        e_overall=e_overall,
        e_normal=e_normal,
        eta=_ratio(ledger.n_w_l1, ledger.n_w_l1 + ledger.n_w_main),
        theta=_ratio(e_normal, e_overall) if e_normal is not None else None,
        static_energy_pj=static_energy(tech, geo, duration),
        avg_backup_time_ns=avg_backup,
        failures=stats.get("failures", 0),
        backup_episodes=episodes,
        n_w_l1=ledger.n_w_l1,
        n_w_main=ledger.n_w_main,
        n_r_l1=ledger.n_r_l1,
        n_r_main=ledger.n_r_main,
        sram_reads=ledger.total(Tech.SRAM, READ),
        sram_writes=ledger.total(Tech.SRAM, WRITE),
        sttram_reads=ledger.total(Tech.STTRAM, READ),
        sttram_writes=ledger.total(Tech.STTRAM, WRITE),
        pcm_reads=ledger.total(Tech.PCM, READ),
        pcm_writes=ledger.total(Tech.PCM, WRITE),
        hits_sram=stats.get("hits_sram", 0),
        hits_sttram=stats.get("hits_sttram", 0),
        misses=stats.get("misses", 0),
        migrations_to_sttram=stats.get("migrations_to_sttram", 0),
        migrations_to_sram=stats.get("migrations_to_sram", 0),
        sttram_write_ratio=_ratio(ledger.counts[Phase.EXEC][Tech.STTRAM][WRITE], exec_writes),
        gap_instructions=ledger.gap_instructions,
        safe_points=stats.get("safe_points", 0),
        rewinds=stats.get("rewinds", 0),
        reexecuted_records=stats.get("reexecuted_records", 0),
        flush_writebacks=ledger.counts[Phase.FLUSH][Tech.PCM][WRITE],
        e_flush=ledger.e_flush,
    )
