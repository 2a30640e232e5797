"""Placement and migration over a hybrid SRAM/STT-RAM set.

:class:`HybridCache` is the object-level engine: every access returns the
ordered list of memory events it caused, which the energy ledger consumes.
It scans ways linearly and keeps one :class:`BlockMeta` per way, so it also
serves as the reference the compiled engine in ``_kernel`` is checked against.

Counters use increment-then-compare: the access that brings RIC (WIC) up to
the threshold is the one that triggers migration or a CONF step.
"""

from __future__ import annotations

from enum import Enum, IntEnum
from typing import NamedTuple

from .core import (
    CONF_MAX,
    BlockMeta,
    CacheGeometry,
    PredictionTable,
    Region,
    Tech,
    conf_advance,
    decompose_address,
)
from .trace import Op


class EventKind(IntEnum):
    READ = 0
    WRITE = 1
    FETCH = 2  # PCM read on a miss
    FILL = 3  # region write of the fetched block
    WRITEBACK = 4  # dirty block to PCM
    MIGRATE_OUT = 5  # source region read
    MIGRATE_IN = 6  # destination region write
    SAVE = 7  # SRAM block copied into STT-RAM at power failure
    RESTORE = 8  # PCM read of a checkpointed block

    @property
    def is_write(self) -> bool:
        return self in _WRITE_KINDS


_WRITE_KINDS = frozenset({EventKind.WRITE, EventKind.FILL, EventKind.WRITEBACK,
                          EventKind.MIGRATE_IN, EventKind.SAVE})


class Event(NamedTuple):
    kind: EventKind
    tech: Tech
    block_addr: int
    content: int = 0


class Classification(Enum):
    HIT_SRAM = "hit_sram"
    HIT_STTRAM = "hit_sttram"
    MISS = "miss"


class AccessOutcome(NamedTuple):
    classification: Classification
    events: list


METRICS = ("ric", "wic", "ric+wic")


def select_victim(blocks, ways, metric: str) -> int:
    """Way in ``ways`` with the smallest metric; ties go to the lowest way index.

    Raises ValueError if any of those ways is free, since the caller should
    fill the free way instead of evicting.
    """
    if metric not in METRICS:
        raise ValueError(f"unknown victim metric {metric!r}")
    use_ric, use_wic = metric != "wic", metric != "ric"
    best, best_key = None, None
    for way in ways:
        b = blocks[way]
        if not b.valid:
            raise ValueError(f"way {way} is free; no victim needed")
        key = (b.ric if use_ric else 0) + (b.wic if use_wic else 0)
        if best is None or key < best_key:
            best, best_key = way, key
    if best is None:
        raise ValueError("region has no ways")
    return best


# region -> the technology backing it
_TECH = (Tech.SRAM, Tech.STTRAM)


def _region_metric(region: Region) -> str:
    # read-intensive blocks are displaced from STT-RAM, write-intensive from SRAM
    return "ric" if region == Region.STTRAM else "wic"


class HybridCache:
    """The proposed architecture: PR-steered placement, counter-driven migration, CONF."""

    uses_prediction = True
    migrates = True
    tracks_conf = True

    def __init__(self, geometry: CacheGeometry, threshold: int = 7,
                 prediction_entries: int = 4096, memory: dict | None = None):
        if threshold < 1:
            raise ValueError("threshold must be >= 1")
        self.geometry = geometry
        self.threshold = threshold
        # hot-path copies of the geometry
        self._ws, self._nsets, self._bs = geometry.ways_sram, geometry.sets, geometry.block_size
        self.sets = [[BlockMeta() for _ in range(geometry.ways_total)]
                     for _ in range(geometry.sets)]
        self.prediction = PredictionTable(prediction_entries)
        # PCM contents: block address -> content tag; absent means never written
        self.memory = {} if memory is None else memory

    # -- helpers -----------------------------------------------------------

    def region_of(self, way: int) -> Region:
        return Region.SRAM if way < self._ws else Region.STTRAM

    def block_address(self, set_index: int, way: int) -> int:
        return (self.sets[set_index][way].tag * self._nsets + set_index) * self._bs

    def lookup(self, addr: int):
        """(set_index, way) of the resident copy of ``addr``; way is None on a miss."""
        tag, set_index = divmod(addr // self._bs, self._nsets)
        for way, b in enumerate(self.sets[set_index]):
            if b.valid and b.tag == tag:
                return set_index, way
        return set_index, None

    def free_way(self, set_index: int, region: Region):
        blocks = self.sets[set_index]
        for way in self.geometry.region_ways(region):
            if not blocks[way].valid:
                return way
        return None

    def store(self, block_addr: int, content: int):
        if content:
            self.memory[block_addr] = content

    def snapshot(self):
        """Hashable copy of all block metadata and PR bits."""
        blocks = tuple(tuple(b.as_tuple() for b in s) for s in self.sets)
        return blocks, bytes(self.prediction.entries)

    # -- access path -------------------------------------------------------

    def access(self, kind: Op, addr: int, write_id: int | None = None) -> AccessOutcome:
        if (kind == Op.WRITE) != (write_id is not None):
            raise ValueError("write_id is required for writes and only for writes")
        set_index, way = self.lookup(addr)
        if way is None:
            return self.handle_miss(kind, addr, write_id)
        if kind == Op.READ:
            return self.handle_read_hit(set_index, way)
        return self.handle_write_hit(set_index, way, write_id)

    def handle_read_hit(self, set_index: int, way: int) -> AccessOutcome:
        b = self.sets[set_index][way]
        region = self.region_of(way)
        events = [Event(EventKind.READ, _TECH[region], self.block_address(set_index, way), b.content)]
        self._bump_read(set_index, way, events)
        cls = Classification.HIT_SRAM if region == Region.SRAM else Classification.HIT_STTRAM
        return AccessOutcome(cls, events)

    def handle_write_hit(self, set_index: int, way: int, write_id: int) -> AccessOutcome:
        events = []
        self._apply_write(set_index, way, write_id, events)
        region = self.region_of(way)
        cls = Classification.HIT_SRAM if region == Region.SRAM else Classification.HIT_STTRAM
        return AccessOutcome(cls, events)

    def handle_miss(self, kind: Op, addr: int, write_id: int | None = None) -> AccessOutcome:
        tag, set_index, offset = decompose_address(addr, self.geometry)
        block_addr = addr - offset
        region = self.placement_region(block_addr)
        events = []
        way = self.free_way(set_index, region)
        if way is None:
            way = self.miss_victim(set_index, region)
            events += self.evict_block(set_index, way)
        content = self.memory.get(block_addr, 0)
        events.append(Event(EventKind.FETCH, Tech.PCM, block_addr, content))
        events.append(Event(EventKind.FILL, _TECH[region], block_addr, content))
        b = self.sets[set_index][way]
        b.valid, b.dirty, b.tag, b.content = True, False, tag, content
        b.ric = b.wic = b.conf = 0
        if kind == Op.READ:
            self._bump_read(set_index, way, events)
        else:
            self._apply_write(set_index, way, write_id, events)
        return AccessOutcome(Classification.MISS, events)

    def evict_block(self, set_index: int, way: int) -> list:
        b = self.sets[set_index][way]
        if not b.valid:
            raise ValueError("cannot evict an invalid block")
        addr = self.block_address(set_index, way)
        events = []
        if b.dirty:
            events.append(Event(EventKind.WRITEBACK, Tech.PCM, addr, b.content))
            self.store(addr, b.content)
        if self.uses_prediction:
            p = self.prediction
            p.entries[p.index(addr, self._bs)] = 1 if way < self._ws else 0
        b.clear()
        return events

    # -- policy hooks ------------------------------------------------------

    def placement_region(self, block_addr: int) -> Region:
        p = self.prediction
        pr = p.entries[p.index(block_addr, self._bs)]
        return Region.STTRAM if pr == 0 else Region.SRAM

    def miss_victim(self, set_index: int, region: Region) -> int:
        return select_victim(self.sets[set_index], self.geometry.region_ways(region),
                             _region_metric(region))

    # -- counters and migration -------------------------------------------

    def _apply_write(self, set_index, way, write_id, events):
        b = self.sets[set_index][way]
        events.append(Event(EventKind.WRITE, _TECH[self.region_of(way)],
                            self.block_address(set_index, way), write_id))
        b.dirty = True
        b.content = write_id
        self._bump_write(set_index, way, events)

    def _bump_read(self, set_index, way, events):
        b = self.sets[set_index][way]
        t = self.threshold
        if not self.migrates or b.conf == CONF_MAX:
            b.ric = min(b.ric + 1, t)
            return
        b.ric += 1
        if b.ric < t:
            return
        if self.region_of(way) == Region.SRAM:
            self._migrate(set_index, way, Region.STTRAM, events)
        else:
            if self.tracks_conf:
                b.conf = conf_advance(b.conf)
            b.ric = 0

    def _bump_write(self, set_index, way, events):
        b = self.sets[set_index][way]
        t = self.threshold
        if not self.migrates or b.conf == CONF_MAX:
            b.wic = min(b.wic + 1, t)
            return
        b.wic += 1
        if b.wic < t:
            return
        if self.region_of(way) == Region.STTRAM:
            self._migrate(set_index, way, Region.SRAM, events)
        else:
            if self.tracks_conf:
                b.conf = conf_advance(b.conf)
            b.wic = 0

    def _migrate(self, set_index, way, dst: Region, events):
        dst_way = self.free_way(set_index, dst)
        if dst_way is None:
            dst_way = select_victim(self.sets[set_index], self.geometry.region_ways(dst),
                                    _region_metric(dst))
            events += self.evict_block(set_index, dst_way)
        src = self.sets[set_index][way]
        addr = self.block_address(set_index, way)
        events.append(Event(EventKind.MIGRATE_OUT, _TECH[self.region_of(way)], addr, src.content))
        events.append(Event(EventKind.MIGRATE_IN, _TECH[dst], addr, src.content))
        moved = self.sets[set_index][dst_way]
        moved.valid, moved.dirty, moved.tag, moved.content = True, src.dirty, src.tag, src.content
        moved.ric = moved.wic = moved.conf = 0
        src.clear()
