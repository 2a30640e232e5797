"""Run orchestration: one trace against one architecture, plus sweeps.

Two interchangeable backends replay a run. ``fast`` hands the whole trace to
the compiled kernel; ``reference`` drives the object engine one access at a
time and tallies every event. Both produce identical reports, final cache
state and memory image.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from decimal import Decimal
from enum import Enum

import numpy as np

from . import __version__
from . import _kernel as K
from .baselines import CheckpointConfig, PureCache, RandomHybridCache
from .config import fingerprint
from .core import CacheGeometry, GeometryError, Region, Tech, TechnologyParams
from .energy import EnergyLedger, Phase, RunReport, finalize
from .intermittence import (
    BackupReport,
    FailureSchedule,
    backup,
    backup_everything,
    failure_points,
    power_on,
)
from .policy import Classification, EventKind, HybridCache
from .rng import placement_seed
from .trace import Op, Trace


class Architecture(Enum):
    PROPOSED = "proposed"
    PURE_SRAM = "pure-sram"
    PURE_STTRAM = "pure-sttram"
    RANDOM_HYBRID = "random-hybrid"
    CHECKPOINT = "checkpoint"

    @property
    def is_hybrid(self) -> bool:
        return self in (Architecture.PROPOSED, Architecture.RANDOM_HYBRID)


class ConfigurationError(GeometryError):
    """Architecture and geometry (or checkpoint settings) do not fit together."""


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimConfig:
    architecture: Architecture = Architecture.PROPOSED
    geometry: CacheGeometry = CacheGeometry()
    threshold: int = 7
    prediction_entries: int = 4096
    technology: TechnologyParams = TechnologyParams()
    failure: FailureSchedule = FailureSchedule()
    checkpoint: CheckpointConfig | None = None
    seed: int = 0
    # extensions: write clean blocks to PCM at backup; keep PR bits over failures
    write_clean: bool = False
    persist_prediction: bool = False

    def validate(self):
        geo = self.geometry
        if self.architecture.is_hybrid and not geo.is_hybrid:
            raise ConfigurationError(
                f"{self.architecture.value} needs SRAM and STT-RAM ways, "
                f"got {geo.ways_sram}:{geo.ways_sttram}")
        if self.architecture == Architecture.CHECKPOINT and self.checkpoint is None:
            raise ConfigurationError("checkpoint architecture needs a checkpoint config")
        if self.threshold < 1:
            raise ConfigurationError("threshold must be >= 1")
        if self.prediction_entries < 1:
            raise ConfigurationError("prediction table needs at least one entry")
        return self

    def effective_geometry(self) -> CacheGeometry:
        if self.architecture in (Architecture.PURE_SRAM, Architecture.CHECKPOINT):
            return self.geometry.as_pure(Region.SRAM)
        if self.architecture == Architecture.PURE_STTRAM:
            return self.geometry.as_pure(Region.STTRAM)
        return self.geometry

    def fingerprint(self) -> str:
        return fingerprint(self)


class MemoryImage(dict):
    """Block address -> content tag. Blocks never written are absent."""


def oracle_image(trace: Trace, block_size: int = 64) -> MemoryImage:
    """Memory after a trivial sequential interpreter applies every write directly."""
    image = MemoryImage()
    writes = trace.ops == Op.WRITE
    blocks = (trace.values[writes] // block_size) * block_size
    for addr, wid in zip(blocks.tolist(), trace.write_ids()[writes].tolist()):
        image[addr] = wid
    return image


def verify_image(run_image, oracle) -> bool:
    return dict(run_image) == dict(oracle)


@dataclass
class RunResult:
    report: RunReport
    image: MemoryImage
    blocks: np.ndarray  # (sets, ways, 7): valid, dirty, tag, ric, wic, conf, content
    prediction: bytes
    backups: list = field(default_factory=list)  # BackupReport per failure


_ARCH_CODE = {
    Architecture.PROPOSED: K.A_PROPOSED,
    Architecture.RANDOM_HYBRID: K.A_RANDOM,
    Architecture.PURE_SRAM: K.A_PURE,
    Architecture.PURE_STTRAM: K.A_PURE,
    Architecture.CHECKPOINT: K.A_CHECKPOINT,
}


def _backup_report(n_l1, n_main, tech, events=None) -> BackupReport:
    cycles = n_l1 * tech.sttram.write_cycles + n_main * tech.pcm.write_cycles
    return BackupReport(n_l1, n_main, cycles, cycles * Decimal(tech.clock_period_ns), events or [])


def _fail_points(config: SimConfig, trace: Trace) -> np.ndarray:
    return np.array(failure_points(config.failure, trace.total_instructions), dtype=np.int64)


def _kernel_run(config: SimConfig, trace: Trace):
    geo = config.effective_geometry()
    ck = config.checkpoint if config.architecture == Architecture.CHECKPOINT else None
    cfg = np.zeros(K.NCFG, np.int64)
    cfg[K.C_SETS] = geo.sets
    cfg[K.C_WAYS] = geo.ways_total
    cfg[K.C_WS] = geo.ways_sram
    cfg[K.C_BSHIFT] = geo.block_shift
    cfg[K.C_SSHIFT] = geo.set_shift
    cfg[K.C_L] = config.prediction_entries
    cfg[K.C_T] = config.threshold
    cfg[K.C_ARCH] = _ARCH_CODE[config.architecture]
    cfg[K.C_WRITE_CLEAN] = int(config.write_clean)
    cfg[K.C_PERSIST] = int(config.persist_prediction)
    blk = np.zeros((geo.sets, geo.ways_total, K.NFIELDS), np.int64)
    pred = np.ones(config.prediction_entries, np.uint8)
    counts = np.zeros((4, 3, 2), np.int64)
    stats = np.zeros(K.NSTATS, np.int64)
    rng = np.array([placement_seed(config.seed)], np.uint64)
    image = K.new_image()
    points = _fail_points(config, trace)
    bk = np.zeros((len(points), 2), np.int64)
    wids = trace.write_ids()
    K.simulate(trace.ops.astype(np.int64), trace.values, wids, blk, pred, cfg, counts, stats,
               rng, image, points,
               ck.period_instructions if ck else 0,
               bool(ck.snapshot_all) if ck else False,
               ck.max_rewinds if ck else 0, bk)
    if stats[K.S_ERROR] == K.ERR_LIVELOCK:
        raise SimulationError("checkpoint rewind limit exceeded")
    return cfg, blk, pred, counts, stats, image, bk


def _execute_fast(config: SimConfig, trace: Trace):
    cfg, blk, pred, counts, stats, image, bk = _kernel_run(config, trace)
    ck = config.checkpoint if config.architecture == Architecture.CHECKPOINT else None
    K.flush(blk, cfg, counts, image)
    tech = config.technology
    ledger = EnergyLedger.from_counts(tech, counts.tolist(), int(stats[K.S_GAP]))
    run_stats = {
        "hits_sram": int(stats[K.S_HIT_SRAM]),
        "hits_sttram": int(stats[K.S_HIT_STT]),
        "misses": int(stats[K.S_MISS]),
        "migrations_to_sttram": int(stats[K.S_MIG_TO_STT]),
        "migrations_to_sram": int(stats[K.S_MIG_TO_SRAM]),
        "failures": int(stats[K.S_FAILURES]),
        "backup_episodes": int(stats[K.S_EPISODES]),
        "safe_points": int(stats[K.S_SAFE_POINTS]),
        "rewinds": int(stats[K.S_REWINDS]),
        "reexecuted_records": int(stats[K.S_REEXEC]),
    }
    backups = [] if ck else [_backup_report(int(a), int(b), tech) for a, b in bk.tolist()]
    pr = bytes(pred.tobytes()) if config.architecture == Architecture.PROPOSED else b""
    keys, vals = K.image_arrays(image)
    return ledger, run_stats, MemoryImage(zip(keys.tolist(), vals.tolist())), blk, pr, backups


def _make_cache(config: SimConfig, memory) -> HybridCache:
    geo = config.effective_geometry()
    arch = config.architecture
    if arch == Architecture.PROPOSED:
        return HybridCache(geo, config.threshold, config.prediction_entries, memory)
    if arch == Architecture.RANDOM_HYBRID:
        return RandomHybridCache(geo, config.threshold, config.seed, memory)
    return PureCache(geo, config.threshold, memory)


def _cache_array(cache: HybridCache) -> np.ndarray:
    return np.array([[b.as_tuple() for b in s] for s in cache.sets], dtype=np.int64).reshape(
        cache.geometry.sets, cache.geometry.ways_total, K.NFIELDS)


def _execute_reference(config: SimConfig, trace: Trace):
    tech = config.technology
    memory = MemoryImage()
    cache = _make_cache(config, memory)
    ledger = EnergyLedger(tech)
    stats = dict.fromkeys(("hits_sram", "hits_sttram", "misses", "migrations_to_sttram",
                           "migrations_to_sram", "failures", "backup_episodes", "safe_points",
                           "rewinds", "reexecuted_records"), 0)
    ck = config.checkpoint if config.architecture == Architecture.CHECKPOINT else None
    points = _fail_points(config, trace).tolist()
    ops = trace.ops.tolist()
    values = trace.values.tolist()
    wids = trace.write_ids().tolist()
    backups = []
    hit_key = {Classification.HIT_SRAM: "hits_sram", Classification.HIT_STTRAM: "hits_sttram",
               Classification.MISS: "misses"}

    snap, snap_i, snap_pos = None, 0, 0
    next_safe = ck.period_instructions if ck else 0
    fi = i = pos = 0
    n = len(ops)
    while True:
        if ck and pos >= next_safe:
            saved = []
            for s, blocks in enumerate(cache.sets):
                for w, b in enumerate(blocks):
                    if b.valid and (b.dirty or ck.snapshot_all):
                        ledger._add(Phase.BACKUP, Tech.PCM, 1)
                        cache.store(cache.block_address(s, w), b.content)
                        b.dirty = False
                        saved.append((s, w, b.as_tuple()))
            snap, snap_i, snap_pos = saved, i, pos
            stats["safe_points"] += 1
            stats["backup_episodes"] += 1
            next_safe = (pos // ck.period_instructions + 1) * ck.period_instructions
        while fi < len(points) and points[fi] <= pos:
            stats["failures"] += 1
            if ck:
                stats["rewinds"] += 1
                if stats["rewinds"] > ck.max_rewinds:
                    raise SimulationError("checkpoint rewind limit exceeded")
                stats["reexecuted_records"] += i - snap_i
                for blocks in cache.sets:
                    for b in blocks:
                        b.clear()
                for s, w, t in snap or ():
                    b = cache.sets[s][w]
                    b.valid, b.dirty = bool(t[0]), bool(t[1])
                    b.tag, b.ric, b.wic, b.conf, b.content = t[2:]
                    ledger._add(Phase.RESTORE, Tech.PCM, 0)
                i, pos = snap_i, snap_pos
                next_safe = (snap_pos // ck.period_instructions + 1) * ck.period_instructions
            else:
                if config.architecture == Architecture.PROPOSED:
                    rep = backup(cache, tech, config.write_clean)
                else:
                    rep = backup_everything(cache, tech, config.write_clean)
                for ev in rep.events:
                    ledger.tally(ev, Phase.BACKUP)
                power_on(cache, config.persist_prediction)
                backups.append(rep)
                stats["backup_episodes"] += 1
            fi += 1
        if i >= n:
            break
        op = ops[i]
        if op == Op.GAP:
            ledger.tally_gap(values[i])
            pos += values[i]
        else:
            out = cache.access(op, values[i], wids[i] if op == Op.WRITE else None)
            stats[hit_key[out.classification]] += 1
            for ev in out.events:
                ledger.tally(ev)
                if ev.kind == EventKind.MIGRATE_IN:
                    key = "migrations_to_sram" if ev.tech == Tech.SRAM else "migrations_to_sttram"
                    stats[key] += 1
            pos += 1
        i += 1

    for s, blocks in enumerate(cache.sets):
        for w, b in enumerate(blocks):
            if b.valid and b.dirty:
                ledger._add(Phase.FLUSH, Tech.PCM, 1)
                cache.store(cache.block_address(s, w), b.content)
    pr = bytes(cache.prediction.entries) if config.architecture == Architecture.PROPOSED else b""
    return ledger, stats, memory, _cache_array(cache), pr, backups


BACKENDS = {"fast": _execute_fast, "reference": _execute_reference}


def final_state(config: SimConfig, trace: Trace, *, backend: str = "fast"):
    """(blocks, PR bytes) after replaying ``trace``, without accounting or the final flush.

    A cheap way to hold the two engines against each other. The reference side
    drives the object engine directly; checkpointing is not supported here.
    """
    config.validate()
    if config.architecture == Architecture.CHECKPOINT:
        raise ValueError("final_state does not model checkpointing")
    if backend == "fast":
        _, blk, pred, *_ = _kernel_run(config, trace)
        return blk, pred.tobytes()
    cache = _make_cache(config, MemoryImage())
    save = backup if config.architecture == Architecture.PROPOSED else backup_everything
    points = _fail_points(config, trace).tolist()
    fi = pos = 0
    for op, value, wid in zip(trace.ops.tolist(), trace.values.tolist(),
                              trace.write_ids().tolist()):
        while fi < len(points) and points[fi] <= pos:
            save(cache, config.technology, config.write_clean)
            power_on(cache, config.persist_prediction)
            fi += 1
        if op == Op.GAP:
            pos += value
            continue
        cache.access(op, value, wid if op == Op.WRITE else None)
        pos += 1
    while fi < len(points) and points[fi] <= pos:
        save(cache, config.technology, config.write_clean)
        power_on(cache, config.persist_prediction)
        fi += 1
    return _cache_array(cache), bytes(cache.prediction.entries)


def execute(config: SimConfig, trace: Trace, *, backend: str = "fast",
            with_theta: bool = False) -> RunResult:
    """Full result of one run: report, memory image, final cache state."""
    config.validate()
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}")
    e_normal = None
    if with_theta and config.failure.mode.value != "none":
        companion = replace(config, failure=FailureSchedule.none())
        e_normal = execute(companion, trace, backend=backend).report.e_overall
    ledger, stats, image, blocks, pr, backups = BACKENDS[backend](config, trace)
    if with_theta and e_normal is None:
        e_normal = ledger.e_overall
    stats["records"] = len(trace)
    stats["instructions"] = trace.total_instructions
    report = finalize(ledger, e_normal, geo=config.effective_geometry(), stats=stats,
                      architecture=config.architecture.value, trace=trace.name,
                      fingerprint=config.fingerprint(), version=__version__)
    return RunResult(report, image, blocks, pr, backups)


def run(config: SimConfig, trace: Trace, *, backend: str = "fast",
        with_theta: bool = False) -> RunReport:
    return execute(config, trace, backend=backend, with_theta=with_theta).report


# -- sweeps -----------------------------------------------------------------


@dataclass(frozen=True)
class SweepAxes:
    thresholds: tuple = ()
    way_splits: tuple = ()  # (ways_sram, ways_sttram)
    failure_modes: tuple = ()  # FailureSchedule values
    architectures: tuple = ()


@dataclass
class SweepRow:
    trace: str
    config: SimConfig
    report: RunReport | None
    diagnostic: str = ""


_PURE_FOR_SPLIT = {True: Architecture.PURE_SRAM, False: Architecture.PURE_STTRAM}


def sweep_configs(base: SimConfig, axes: SweepAxes):
    """Expand the Cartesian product of the axes into (config, diagnostic) pairs.

    A hybrid architecture meeting a degenerate split (all ways in one region)
    runs as the matching pure cache, noted in the diagnostic. Other invalid
    combinations come back with config None.
    """
    out = []
    for arch, t, split, fail in itertools.product(
            axes.architectures or (base.architecture,), axes.thresholds or (base.threshold,),
            axes.way_splits or ((base.geometry.ways_sram, base.geometry.ways_sttram),),
            axes.failure_modes or (base.failure,)):
        label = f"{arch.value} t={t} split={split[0]}:{split[1]} failure={fail.label()}"
        try:
            geo = replace(base.geometry, ways_sram=split[0], ways_sttram=split[1])
        except GeometryError as exc:
            out.append((None, f"skipped {label}: {exc}"))
            continue
        diag = ""
        if arch.is_hybrid and not geo.is_hybrid:
            sub = _PURE_FOR_SPLIT[geo.ways_sram > 0]
            diag = f"{arch.value} at split {split[0]}:{split[1]} runs as {sub.value}"
            arch = sub
        cfg = replace(base, architecture=arch, threshold=t, geometry=geo, failure=fail)
        if arch == Architecture.CHECKPOINT and cfg.checkpoint is None:
            cfg = replace(cfg, checkpoint=CheckpointConfig())
        try:
            cfg.validate()
        except GeometryError as exc:
            out.append((None, f"skipped {label}: {exc}"))
            continue
        out.append((cfg, diag))
    return out


def _sweep_job(args):
    config, trace, backend, with_theta = args
    try:
        return run(config, trace, backend=backend, with_theta=with_theta), ""
    except (GeometryError, SimulationError) as exc:
        return None, f"failed: {exc}"


def sweep(base: SimConfig, axes: SweepAxes, traces, *, jobs: int = 1, backend: str = "fast",
          with_theta: bool = False) -> list[SweepRow]:
    rows, work = [], []
    for trace in traces:
        for cfg, diag in sweep_configs(base, axes):
            rows.append(SweepRow(trace.name, cfg, None, diag))
            if cfg is not None:
                work.append((len(rows) - 1, (cfg, trace, backend, with_theta)))
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_job, [w for _, w in work]))
    else:
        results = [_sweep_job(w) for _, w in work]
    for (idx, _), (report, err) in zip(work, results):
        rows[idx].report = report
        if err:
            rows[idx].diagnostic = "; ".join(x for x in (rows[idx].diagnostic, err) if x)
    return rows
