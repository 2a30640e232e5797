"""Built-in replay of the five-block worked example.

One set, two SRAM ways and two STT-RAM ways, threshold 7. Blocks a, b, c, e, d
are block numbers 0..4, so their prediction-table indices are 0..4. The run
starts with a and c in SRAM, b and d in STT-RAM, and the PR bit for e
cleared. Checks are evaluated at each labelled point and the replay stops at
the first divergence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernel as K
from .core import CONF_MAX, CacheGeometry, Region, conf_advance
from .intermittence import backup, power_on
from .policy import HybridCache
from .trace import Op

GEOMETRY = CacheGeometry(capacity_bytes=256, block_size=64, ways_sram=2, ways_sttram=2)
THRESHOLD = 7
BLOCKS = {"a": 0, "b": 1, "c": 2, "e": 3, "d": 4}
NAMES = {v: k for k, v in BLOCKS.items()}
INITIAL = ("a", "c", "b", "d")  # way order: SRAM, SRAM, STT-RAM, STT-RAM
CLEARED_PR = ("e",)


def addr(name: str) -> int:
    return BLOCKS[name] * GEOMETRY.block_size


@dataclass(frozen=True)
class Resident:
    name: str
    region: Region
    ric: int
    wic: int
    conf: int
    dirty: bool

    def __str__(self):
        return (f"{self.name}@{self.region.name}[ric={self.ric}, wic={self.wic}, "
                f"conf={self.conf:02b}{', dirty' if self.dirty else ''}]")


class ObjectEngine:
    """Adapter over the object engine; ``cache_cls`` allows mutants."""

    label = "object"

    def __init__(self, cache_cls=HybridCache):
        self.cache = cache_cls(GEOMETRY, THRESHOLD, 4096)
        for way, name in enumerate(INITIAL):
            b = self.cache.sets[0][way]
            b.valid, b.tag = True, BLOCKS[name]
        for name in CLEARED_PR:
            self.cache.prediction[BLOCKS[name]] = 0

    def read(self, name):
        self.cache.access(Op.READ, addr(name))

    def write(self, name, wid):
        self.cache.access(Op.WRITE, addr(name), wid)

    def power_failure(self):
        backup(self.cache)
        power_on(self.cache)

    def residents(self):
        return [None if not b.valid else
                Resident(NAMES.get(b.tag, str(b.tag)), GEOMETRY.region_of(w), b.ric, b.wic,
                         b.conf, b.dirty)
                for w, b in enumerate(self.cache.sets[0])]

    def pr(self, name):
        return self.cache.prediction[BLOCKS[name]]


class CompiledEngine:
    """Adapter that steps the compiled kernel one access at a time."""

    label = "compiled"

    def __init__(self):
        g = GEOMETRY
        self.cfg = np.zeros(K.NCFG, np.int64)
        self.cfg[[K.C_SETS, K.C_WAYS, K.C_WS, K.C_BSHIFT, K.C_SSHIFT, K.C_L, K.C_T, K.C_ARCH]] = (
            g.sets, g.ways_total, g.ways_sram, g.block_shift, g.set_shift, 4096, THRESHOLD,
            K.A_PROPOSED)
        self.blk = np.zeros((g.sets, g.ways_total, K.NFIELDS), np.int64)
        for way, name in enumerate(INITIAL):
            self.blk[0, way, K.V] = 1
            self.blk[0, way, K.TAG] = BLOCKS[name]
        self.pred = np.ones(4096, np.uint8)
        for name in CLEARED_PR:
            self.pred[BLOCKS[name]] = 0
        self.counts = np.zeros((4, 3, 2), np.int64)
        self.stats = np.zeros(K.NSTATS, np.int64)
        self.rng = np.zeros(1, np.uint64)
        self.image = K.new_image()

    def _access(self, kind, name, wid):
        K.access(self.blk, self.pred, self.cfg, self.counts, self.stats, self.rng, self.image,
                 kind, addr(name), wid)

    def read(self, name):
        self._access(0, name, 0)

    def write(self, name, wid):
        self._access(1, name, wid)

    def power_failure(self):
        K.fail(self.blk, self.pred, self.cfg, self.counts, self.image, np.zeros(2, np.int64))

    def residents(self):
        out = []
        for w in range(GEOMETRY.ways_total):
            v, d, tag, ric, wic, conf, _ = (int(x) for x in self.blk[0, w])
            out.append(Resident(NAMES.get(tag, str(tag)), GEOMETRY.region_of(w), ric, wic, conf,
                                bool(d)) if v else None)
        return out

    def pr(self, name):
        return int(self.pred[BLOCKS[name]])


# -- mutants used to show the replay catches policy mistakes -----------------


class CompareThenIncrement(HybridCache):
    """Tests the counter against the threshold before incrementing it."""

    def _bump_read(self, set_index, way, events):
        self._bump_late(set_index, way, events, "ric", Region.SRAM, Region.STTRAM)

    def _bump_write(self, set_index, way, events):
        self._bump_late(set_index, way, events, "wic", Region.STTRAM, Region.SRAM)

    def _bump_late(self, set_index, way, events, counter, migrate_from, dst):
        b = self.sets[set_index][way]
        value = getattr(b, counter)
        if b.conf == CONF_MAX or value < self.threshold:
            setattr(b, counter, min(value + 1, self.threshold))
        elif self.region_of(way) == migrate_from:
            self._migrate(set_index, way, dst, events)
        else:
            b.conf = conf_advance(b.conf)
            setattr(b, counter, 0)


class WicGreaterThanRicPR(HybridCache):
    """Sets the PR bit from WIC > RIC at eviction instead of from the region."""

    def evict_block(self, set_index, way):
        b = self.sets[set_index][way]
        bit = 1 if b.wic > b.ric else 0
        index = self.prediction.index(self.block_address(set_index, way), GEOMETRY.block_size)
        events = super().evict_block(set_index, way)
        self.prediction[index] = bit
        return events


MUTANTS = {
    "compare-then-increment": CompareThenIncrement,
    "wic-gt-ric-pr": WicGreaterThanRicPR,
}


# -- the scenario -------------------------------------------------------------


class Divergence(AssertionError):
    def __init__(self, point, message, residents):
        self.point = point
        self.residents = residents
        super().__init__(f"point {point}: {message}")

    def state_diff(self) -> str:
        lines = [str(self)]
        for way, r in enumerate(self.residents):
            lines.append(f"  way {way}: {r if r else '-'}")
        return "\n".join(lines)


def _find(engine, name):
    for r in engine.residents():
        if r is not None and r.name == name:
            return r
    return None


def _expect(point, engine, ok, message):
    if not ok:
        raise Divergence(point, message, engine.residents())


def _block(point, engine, name, region=None, **fields):
    r = _find(engine, name)
    _expect(point, engine, r is not None, f"{name} should be cached")
    if region is not None:
        _expect(point, engine, r.region == region, f"{name} should be in {region.name}, found {r}")
    for key, want in fields.items():
        got = getattr(r, key)
        _expect(point, engine, got == want, f"{name}.{key} should be {want}, found {got} ({r})")


def _absent(point, engine, name):
    r = _find(engine, name)
    _expect(point, engine, r is None, f"{name} should have left the cache, found {r}")


def replay(engine) -> list[str]:
    """Run the scenario on ``engine``; returns the passed point labels or raises Divergence."""
    passed = []
    wid = iter(range(1, 1000))
    SRAM, STT = Region.SRAM, Region.STTRAM

    def reads(name, n):
        for _ in range(n):
            engine.read(name)

    def writes(name, n):
        for _ in range(n):
            engine.write(name, next(wid))

    reads("a", 2)
    _block("A", engine, "a", SRAM, ric=2, wic=0)
    passed.append("A")

    writes("b", 2)
    _block("B", engine, "b", STT, wic=2)
    passed.append("B")

    reads("a", 1)
    writes("a", 1)
    _block("C", engine, "a", SRAM, ric=3, wic=1)
    passed.append("C")

    writes("b", 5)  # b's wic reaches 7
    _block("D", engine, "b", SRAM, ric=0, wic=0, conf=0)
    _absent("D", engine, "c")
    passed.append("D")

    reads("a", 4)  # a's ric reaches 7
    _block("E", engine, "a", STT, ric=0, wic=0, conf=0)
    writes("b", 2)
    _block("E", engine, "b", SRAM, wic=2)
    passed.append("E")

    reads("a", 4)
    _block("F", engine, "a", STT, ric=4)
    passed.append("F")

    _expect("c-miss", engine, engine.pr("c") == 1, f"PR[c] should be 1, found {engine.pr('c')}")
    writes("c", 1)
    _block("c-miss", engine, "c", SRAM, wic=1, dirty=True)
    passed.append("c-miss")

    writes("c", 6)  # c's wic reaches 7 inside SRAM
    _block("G", engine, "c", SRAM, wic=0, conf=1)
    _block("G", engine, "a", STT, ric=4)
    passed.append("G")

    writes("c", 3)
    _block("H", engine, "c", SRAM, wic=3, conf=1)
    passed.append("H")

    reads("e", 1)
    _absent("I", engine, "d")
    _block("I", engine, "e", STT, ric=1, wic=0, conf=0)
    passed.append("I")

    engine.power_failure()
    stt = sorted(r.name for r in engine.residents() if r is not None and r.region == STT)
    _expect("J", engine, stt == ["b", "c"], f"STT-RAM should hold {{b, c}}, holds {stt}")
    _expect("J", engine, all(r is None for r in engine.residents()[:GEOMETRY.ways_sram]),
            "SRAM should be empty after power-on")
    passed.append("J")

    reads("c", 1)
    reads("b", 1)
    _block("K", engine, "c", STT, ric=1)
    _block("K", engine, "b", STT, ric=1)
    passed.append("K")
    return passed


ENGINES = {"object": ObjectEngine, "compiled": CompiledEngine}


def make_engine(name: str = "object", mutant: str | None = None):
    if mutant is not None:
        if name != "object":
            raise ValueError("mutants exist only for the object engine")
        return ObjectEngine(MUTANTS[mutant])
    return ENGINES[name]()
