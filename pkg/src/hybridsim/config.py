"""``key = value`` configuration files.

Every key has a default, so an empty file (or the literal name ``default``)
describes the 16 KB, 2+2-way, threshold-7 setup. ``#`` starts a comment.
"""

from __future__ import annotations

import hashlib
from dataclasses import replace
from decimal import Decimal, InvalidOperation
from pathlib import Path

from .baselines import CheckpointConfig
from .core import CacheGeometry, TechnologyParams, TechSpec, format_pj, pj
from .intermittence import FailureMode, FailureSchedule


class ConfigError(ValueError):
    def __init__(self, message: str, lineno: int | None = None):
        prefix = f"line {lineno}: " if lineno else ""
        super().__init__(prefix + message)
        self.lineno = lineno


_TECH_FIELDS = ("read_cycles", "write_cycles", "read_energy_pj", "write_energy_pj",
                "leakage_uw_per_16kb")

DEFAULTS = {
    "architecture": "proposed",
    "seed": "0",
    "cache.size_bytes": "16384",
    "cache.block_size": "64",
    "cache.ways_sram": "2",
    "cache.ways_sttram": "2",
    "prediction.entries": "4096",
    "prediction.persist": "false",
    "policy.threshold": "7",
    "backup.write_clean": "false",
    "clock.period_ns": "2",
    "failure.mode": "none",
    "failure.period": "2000000",
    "failure.lo": "2000000",
    "failure.hi": "4000000",
    "checkpoint.period": "4000000",
    "checkpoint.snapshot": "dirty",
}
for _name, _spec in (("sram", TechnologyParams().sram), ("sttram", TechnologyParams().sttram),
                     ("pcm", TechnologyParams().pcm)):
    DEFAULTS[f"tech.{_name}.read_cycles"] = str(_spec.read_cycles)
    DEFAULTS[f"tech.{_name}.write_cycles"] = str(_spec.write_cycles)
    DEFAULTS[f"tech.{_name}.read_energy_pj"] = format_pj(_spec.read_energy)
    DEFAULTS[f"tech.{_name}.write_energy_pj"] = format_pj(_spec.write_energy)
    DEFAULTS[f"tech.{_name}.leakage_uw_per_16kb"] = str(_spec.leakage_uw)

KEYS = tuple(DEFAULTS)


def parse_config_text(text: str) -> dict:
    """Raw ``{key: value}`` from config text, validated for syntax and known keys."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if not value:
            raise ConfigError(f"empty value for {key!r}", lineno)
        values[key] = (value, lineno)
    return values


def _int(key, value, lineno):
    try:
        return int(value, 0)
    except ValueError:
        raise ConfigError(f"{key} expects an integer, got {value!r}", lineno) from None


def _decimal(key, value, lineno):
    try:
        return Decimal(value)
    except InvalidOperation:
        raise ConfigError(f"{key} expects a number, got {value!r}", lineno) from None


def _bool(key, value, lineno):
    if value.lower() in ("true", "yes", "1"):
        return True
    if value.lower() in ("false", "no", "0"):
        return False
    raise ConfigError(f"{key} expects true/false, got {value!r}", lineno)


def build_config(values: dict):
    """SimConfig from raw values. Geometry violations raise GeometryError."""
    from .driver import Architecture, SimConfig

    merged = {k: (v, None) for k, v in DEFAULTS.items()}
    merged.update(values)

    def get(key, conv=None):
        value, lineno = merged[key]
        return conv(key, value, lineno) if conv else value

    try:
        arch = Architecture(get("architecture"))
    except ValueError:
        raise ConfigError(f"unknown architecture {get('architecture')!r}",
                          merged["architecture"][1]) from None

    techs = {}
    for name in ("sram", "sttram", "pcm"):
        try:
            techs[name] = TechSpec(
                get(f"tech.{name}.read_cycles", _int),
                get(f"tech.{name}.write_cycles", _int),
                pj(get(f"tech.{name}.read_energy_pj", _decimal)),
                pj(get(f"tech.{name}.write_energy_pj", _decimal)),
                get(f"tech.{name}.leakage_uw_per_16kb", _int),
            )
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"tech.{name}: {exc}") from None
    try:
        tech = TechnologyParams(techs["sram"], techs["sttram"], techs["pcm"],
                                get("clock.period_ns", _decimal))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    seed = get("seed", _int)
    mode = get("failure.mode")
    try:
        if mode == "none":
            failure = FailureSchedule.none()
        elif mode == "periodic":
            failure = FailureSchedule.periodic(get("failure.period", _int))
        elif mode == "random":
            failure = FailureSchedule.random_uniform(get("failure.lo", _int),
                                                     get("failure.hi", _int), seed)
        else:
            raise ConfigError(f"unknown failure.mode {mode!r}", merged["failure.mode"][1])
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    snapshot = get("checkpoint.snapshot")
    if snapshot not in ("dirty", "all"):
        raise ConfigError("checkpoint.snapshot must be 'dirty' or 'all'",
                          merged["checkpoint.snapshot"][1])
    try:
        checkpoint = CheckpointConfig(get("checkpoint.period", _int), snapshot == "all")
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    threshold = get("policy.threshold", _int)
    entries = get("prediction.entries", _int)
    if threshold < 1:
        raise ConfigError("policy.threshold must be >= 1")
    if entries < 1:
        raise ConfigError("prediction.entries must be >= 1")

    geometry = CacheGeometry(get("cache.size_bytes", _int), get("cache.block_size", _int),
                             get("cache.ways_sram", _int), get("cache.ways_sttram", _int))
    return SimConfig(
        architecture=arch,
        geometry=geometry,
        threshold=threshold,
        prediction_entries=entries,
        technology=tech,
        failure=failure,
        checkpoint=checkpoint,
        seed=seed,
        write_clean=get("backup.write_clean", _bool),
        persist_prediction=get("prediction.persist", _bool),
    )


def load_config(source):
    """Load a SimConfig from a path; ``"default"`` (when no such file exists) means all defaults."""
    if source is None or (str(source) == "default" and not Path(source).exists()):
        text = ""
    else:
        text = Path(source).read_text(encoding="utf-8")
    return build_config(parse_config_text(text))


def dump_config(config) -> str:
    """Canonical text form of a SimConfig: every key, fixed order."""
    t = config.technology
    g = config.geometry
    f = config.failure
    ck = config.checkpoint or CheckpointConfig()
    values = {
        "architecture": config.architecture.value,
        "seed": str(config.seed),
        "cache.size_bytes": str(g.capacity_bytes),
        "cache.block_size": str(g.block_size),
        "cache.ways_sram": str(g.ways_sram),
        "cache.ways_sttram": str(g.ways_sttram),
        "prediction.entries": str(config.prediction_entries),
        "prediction.persist": str(config.persist_prediction).lower(),
        "policy.threshold": str(config.threshold),
        "backup.write_clean": str(config.write_clean).lower(),
        "clock.period_ns": str(t.clock_period_ns),
        "failure.mode": f.mode.value,
        "failure.period": str(f.period) if f.mode == FailureMode.PERIODIC else DEFAULTS["failure.period"],
        "failure.lo": str(f.lo) if f.mode == FailureMode.RANDOM else DEFAULTS["failure.lo"],
        "failure.hi": str(f.hi) if f.mode == FailureMode.RANDOM else DEFAULTS["failure.hi"],
        "checkpoint.period": str(ck.period_instructions),
        "checkpoint.snapshot": "all" if ck.snapshot_all else "dirty",
    }
    for name, spec in (("sram", t.sram), ("sttram", t.sttram), ("pcm", t.pcm)):
        values[f"tech.{name}.read_cycles"] = str(spec.read_cycles)
        values[f"tech.{name}.write_cycles"] = str(spec.write_cycles)
        values[f"tech.{name}.read_energy_pj"] = format_pj(spec.read_energy)
        values[f"tech.{name}.write_energy_pj"] = format_pj(spec.write_energy)
        values[f"tech.{name}.leakage_uw_per_16kb"] = str(spec.leakage_uw)
    return "".join(f"{k} = {values[k]}\n" for k in KEYS)


def fingerprint(config) -> str:
    return hashlib.sha256(dump_config(config).encode()).hexdigest()[:16]


def with_failure(config, schedule: FailureSchedule):
    return replace(config, failure=schedule)
