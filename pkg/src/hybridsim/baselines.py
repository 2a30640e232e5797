"""Comparison architectures.

* pure SRAM / pure STT-RAM: one region, no prediction, no migration; victim is
  the lowest RIC+WIC block.
* random hybrid: the region of a missing block is one SplitMix64 draw (even
  draw -> SRAM); counters migrate blocks as in the proposed design but there is
  no prediction table and CONF never moves.
* periodic checkpointing over an SRAM cache backed by PCM (see
  :func:`checkpoint_run`).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .core import CacheGeometry, GeometryError, Region
from .policy import AccessOutcome, HybridCache, select_victim
from .rng import SplitMix64, placement_seed


class BaselineKind(Enum):
    PURE_SRAM = "pure-sram"
    PURE_STTRAM = "pure-sttram"
    RANDOM_HYBRID = "random-hybrid"
    CHECKPOINT_SRAM_PCM = "checkpoint"


class PureCache(HybridCache):
    uses_prediction = False
    migrates = False
    tracks_conf = False

    def __init__(self, geometry: CacheGeometry, threshold: int = 7, memory=None):
        if geometry.is_hybrid:
            raise GeometryError("a pure cache needs every way in one region")
        super().__init__(geometry, threshold, 1, memory)
        self.region = Region.SRAM if geometry.ways_sram else Region.STTRAM

    def placement_region(self, block_addr):
        return self.region

    def miss_victim(self, set_index, region):
        return select_victim(self.sets[set_index], self.geometry.region_ways(region), "ric+wic")


class RandomHybridCache(HybridCache):
    uses_prediction = False
    tracks_conf = False

    def __init__(self, geometry: CacheGeometry, threshold: int = 7, seed: int = 0, memory=None):
        if not geometry.is_hybrid:
            raise GeometryError("random placement needs both SRAM and STT-RAM ways")
        super().__init__(geometry, threshold, 1, memory)
        self.rng = SplitMix64(placement_seed(seed))

    def placement_region(self, block_addr):
        return Region.SRAM if self.rng.next() % 2 == 0 else Region.STTRAM


def make_baseline(kind: BaselineKind, geometry: CacheGeometry, threshold: int = 7,
                  seed: int = 0, memory=None) -> HybridCache:
    if kind in (BaselineKind.PURE_SRAM, BaselineKind.CHECKPOINT_SRAM_PCM):
        return PureCache(geometry.as_pure(Region.SRAM), threshold, memory)
    if kind == BaselineKind.PURE_STTRAM:
        return PureCache(geometry.as_pure(Region.STTRAM), threshold, memory)
    return RandomHybridCache(geometry, threshold, seed, memory)


def baseline_access(kind: BaselineKind, state: HybridCache, access) -> AccessOutcome:
    """Apply one (op, address, write_id) access to a baseline cache."""
    expected = RandomHybridCache if kind == BaselineKind.RANDOM_HYBRID else PureCache
    if not isinstance(state, expected):
        raise TypeError(f"{kind.value} needs a {expected.__name__}")
    op, addr, write_id = access
    return state.access(op, addr, write_id)


@dataclass(frozen=True)
class CheckpointConfig:
    period_instructions: int = 4_000_000
    # snapshot every valid block instead of only the dirty ones
    snapshot_all: bool = False
    max_rewinds: int = 1_000_000

    def __post_init__(self):
        if self.period_instructions < 1:
            raise ValueError("checkpoint period must be >= 1")


def checkpoint_run(trace, cfg: CheckpointConfig, failure_schedule, config=None, **kwargs):
    """Run the SRAM+PCM periodic-checkpoint architecture over ``trace``.

    At every multiple of the period the dirty cached blocks are written to PCM
    and their metadata is recorded. A power failure discards the cache,
    rewinds to the last safe point and reloads the recorded blocks (one PCM
    read each). Extra keyword arguments go to :func:`hybridsim.driver.run`.
    """
    from dataclasses import replace

    from .driver import Architecture, SimConfig, run

    base = config or SimConfig()
    config = replace(base, architecture=Architecture.CHECKPOINT, checkpoint=cfg,
                     failure=failure_schedule)
    return run(config, trace, **kwargs)
