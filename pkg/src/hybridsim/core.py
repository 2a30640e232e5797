"""Geometry, addressing, block metadata and technology constants.

Everything in here is shared by the policy engines (pure Python and compiled)
and by the accounting layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from decimal import Decimal
from enum import IntEnum
from fractions import Fraction

ADDRESS_BITS = 48

#: energies are integers in units of 1e-6 pJ so ledger sums are exact
UNITS_PER_PJ = 10**6

CONF_MAX = 3


class GeometryError(ValueError):
    """Raised for cache shapes that violate the set-associative layout rules."""


class Region(IntEnum):
    SRAM = 0
    STTRAM = 1


class Tech(IntEnum):
    SRAM = 0
    STTRAM = 1
    PCM = 2


def _is_pow2(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


@dataclass(frozen=True)
class CacheGeometry:
    """Shape of one hybrid cache. SRAM ways come first in every set."""

    capacity_bytes: int = 16 * 1024
    block_size: int = 64
    ways_sram: int = 2
    ways_sttram: int = 2

    def __post_init__(self):
        if self.ways_sram < 0 or self.ways_sttram < 0:
            raise GeometryError("way counts must be non-negative")
        if self.ways_total < 1:
            raise GeometryError("cache needs at least one way")
        if not _is_pow2(self.block_size):
            raise GeometryError(f"block size {self.block_size} is not a power of two")
        line = self.block_size * self.ways_total
        if self.capacity_bytes <= 0 or self.capacity_bytes % line:
            raise GeometryError(
                f"capacity {self.capacity_bytes} is not a multiple of "
                f"block_size*ways ({line})"
            )
        if not _is_pow2(self.capacity_bytes // line):
            raise GeometryError(f"set count {self.capacity_bytes // line} is not a power of two")

    @cached_property
    def ways_total(self) -> int:
        return self.ways_sram + self.ways_sttram

    @cached_property
    def sets(self) -> int:
        return self.capacity_bytes // (self.block_size * self.ways_total)

    @property
    def blocks(self) -> int:
        return self.capacity_bytes // self.block_size

    @cached_property
    def block_shift(self) -> int:
        return self.block_size.bit_length() - 1

    @cached_property
    def set_shift(self) -> int:
        return self.sets.bit_length() - 1

    def region_of(self, way: int) -> Region:
        return Region.SRAM if way < self.ways_sram else Region.STTRAM

    def region_ways(self, region: Region) -> range:
        return self._region_ranges[region]

    @cached_property
    def _region_ranges(self) -> tuple[range, range]:
        return range(0, self.ways_sram), range(self.ways_sram, self.ways_total)

    def region_capacity(self, region: Region) -> int:
        return len(self.region_ways(region)) * self.sets * self.block_size

    def as_pure(self, region: Region) -> "CacheGeometry":
        """Same capacity and associativity with every way in one region."""
        if region == Region.SRAM:
            return CacheGeometry(self.capacity_bytes, self.block_size, self.ways_total, 0)
        return CacheGeometry(self.capacity_bytes, self.block_size, 0, self.ways_total)

    @property
    def is_hybrid(self) -> bool:
        return self.ways_sram > 0 and self.ways_sttram > 0


def decompose_address(addr: int, geo: CacheGeometry) -> tuple[int, int, int]:
    """Split a byte address into (tag, set_index, block_offset)."""
    block, offset = divmod(addr, geo.block_size)
    tag, set_index = divmod(block, geo.sets)
    return tag, set_index, offset


def prediction_index(addr: int, block_size: int, entries: int) -> int:
    if entries <= 0:
        raise ValueError("prediction table needs at least one entry")
    return (addr // block_size) % entries


def conf_advance(conf: int) -> int:
    if not 0 <= conf <= CONF_MAX:
        raise ValueError(f"conf out of range: {conf}")
    return min(conf + 1, CONF_MAX)


def counter_width(threshold: int) -> int:
    """Bits needed for a saturating counter that counts 0..threshold."""
    if threshold < 1:
        raise ValueError("threshold must be >= 1")
    return threshold.bit_length()


@dataclass(frozen=True)
class StorageOverhead:
    metadata_bits: int
    table_bits: int
    fraction: Fraction

    @property
    def total_bits(self) -> int:
        return self.metadata_bits + self.table_bits

    @property
    def percent(self) -> float:
        return float(self.fraction * 100)


def storage_overhead(geo: CacheGeometry, entries: int, threshold: int,
                     total_cache_bytes: int | None = None) -> StorageOverhead:
    """Extra bits added by the policy: two counters + CONF per block, one PR bit per table entry.

    ``total_cache_bytes`` is the denominator for the percentage; it defaults to
    the data cache capacity but the L1 total (data + instruction) is the usual
    reference point.
    """
    meta = geo.blocks * (2 * counter_width(threshold) + 2)
    table = max(entries, 0)
    total = geo.capacity_bytes if total_cache_bytes is None else total_cache_bytes
    return StorageOverhead(meta, table, Fraction(meta + table, 8 * total))


@dataclass(slots=True)
class BlockMeta:
    valid: bool = False
    dirty: bool = False
    tag: int = 0
    ric: int = 0
    wic: int = 0
    conf: int = 0
    content: int = 0

    def clear(self):
        self.valid = False
        self.dirty = False
        self.tag = 0
        self.ric = 0
        self.wic = 0
        self.conf = 0
        self.content = 0

    def as_tuple(self) -> tuple:
        return (int(self.valid), int(self.dirty), self.tag, self.ric, self.wic,
                self.conf, self.content)


class PredictionTable:
    """Direct-mapped table of one-bit previous-region entries, all ones when fresh."""

    def __init__(self, entries: int = 4096):
        if entries < 1:
            raise ValueError("prediction table needs at least one entry")
        self.entries = bytearray(b"\x01" * entries)

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, index: int) -> int:
        return self.entries[index]

    def __setitem__(self, index: int, value: int):
        if value not in (0, 1):
            raise ValueError("PR bits are 0 or 1")
        self.entries[index] = value

    def index(self, addr: int, block_size: int) -> int:
        # same mapping as prediction_index, without re-checking the entry count
        return (addr // block_size) % len(self.entries)

    def reset(self):
        self.entries[:] = b"\x01" * len(self.entries)


def pj(value) -> int:
    """Picojoules (int, str or Decimal) to integer ledger units."""
    units = Decimal(str(value)) * UNITS_PER_PJ
    if units != units.to_integral_value():
        raise ValueError(f"{value} pJ is finer than the 1e-6 pJ ledger resolution")
    return int(units)


def format_pj(units: int) -> str:
    """Render ledger units as an exact decimal picojoule string."""
    sign = "-" if units < 0 else ""
    whole, frac = divmod(abs(units), UNITS_PER_PJ)
    return f"{sign}{whole}.{frac:06d}"


def parse_pj(text: str) -> int:
    return pj(Decimal(text))


@dataclass(frozen=True)
class TechSpec:
    read_cycles: int
    write_cycles: int
    read_energy: int  # ledger units
    write_energy: int  # ledger units
    leakage_uw: int  # per 16 KB

    def __post_init__(self):
        for name in ("read_cycles", "write_cycles", "read_energy", "write_energy"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.leakage_uw < 0:
            raise ValueError("leakage must be non-negative")

    def cycles(self, is_write: bool) -> int:
        return self.write_cycles if is_write else self.read_cycles

    def energy(self, is_write: bool) -> int:
        return self.write_energy if is_write else self.read_energy


# Latencies in cycles at a 2 ns clock; energies per block access; leakage per 16 KB.
DEFAULT_SRAM = TechSpec(1, 2, pj(6), pj(2), 18972)
DEFAULT_STTRAM = TechSpec(2, 10, pj(81), pj(217), 3014)
# PCM write energy is the RESET figure (SET is 6927 pJ); main memory leakage is not modelled.
DEFAULT_PCM = TechSpec(35, 100, pj(1553), pj(6946), 0)


@dataclass(frozen=True)
class TechnologyParams:
    sram: TechSpec = DEFAULT_SRAM
    sttram: TechSpec = DEFAULT_STTRAM
    pcm: TechSpec = DEFAULT_PCM
    clock_period_ns: Decimal = field(default=Decimal(2))

    def __post_init__(self):
        if Decimal(self.clock_period_ns) <= 0:
            raise ValueError("clock period must be positive")

    def spec(self, tech: Tech) -> TechSpec:
        return (self.sram, self.sttram, self.pcm)[tech]

    def latency_table(self):
        """[tech][op] cycles, op 0 = read, 1 = write."""
        return [[t.read_cycles, t.write_cycles] for t in (self.sram, self.sttram, self.pcm)]

    def energy_table(self):
        return [[t.read_energy, t.write_energy] for t in (self.sram, self.sttram, self.pcm)]
