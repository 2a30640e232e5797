"""Command-line front end.

Exit codes: 0 success, 1 golden-replay divergence or self-test failure,
2 config/trace parse errors (and empty trace globs), 3 invalid
architecture/geometry combinations.
"""

from __future__ import annotations

import argparse
import glob
import sys
from dataclasses import replace
from decimal import Decimal
from pathlib import Path

from . import __version__
from .config import ConfigError, load_config
from .core import CacheGeometry, GeometryError, TechnologyParams, pj, storage_overhead
from .driver import Architecture, SimConfig, SimulationError, SweepAxes, execute, sweep
from .golden import MUTANTS, Divergence, make_engine, replay
from .intermittence import FailureMode, FailureSchedule
from .report import FORMATS, serialize, to_tabular
from .trace import SyntheticTraceSpec, TraceParseError, generate_synthetic, load_trace, save_trace

EXIT_OK, EXIT_DIVERGED, EXIT_PARSE, EXIT_INVALID = 0, 1, 2, 3


class UsageError(Exception):
    """Bad flag values; reported with exit code 2."""


def _err(msg):
    print(f"hybridsim: {msg}", file=sys.stderr)


def _emit(text, out):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _csv_ints(text):
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def _splits(text):
    out = []
    for part in text.split(","):
        try:
            s, t = part.split(":")
            out.append((int(s), int(t)))
        except ValueError:
            raise UsageError(f"bad way split {part!r}; expected SRAM:STTRAM") from None
    return tuple(out)


def _schedule(text, seed):
    try:
        return FailureSchedule.parse(text, seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _architecture(text):
    try:
        return Architecture(text)
    except ValueError:
        choices = ", ".join(a.value for a in Architecture)
        raise UsageError(f"unknown architecture {text!r} (choose from {choices})") from None


def _apply_overrides(config: SimConfig, args) -> SimConfig:
    if args.seed is not None:
        config = replace(config, seed=args.seed)
        if config.failure.mode == FailureMode.RANDOM:
            config = replace(config, failure=replace(config.failure, seed=args.seed))
    if getattr(args, "arch", None):
        config = replace(config, architecture=_architecture(args.arch))
    if getattr(args, "failure", None):
        config = replace(config, failure=_schedule(args.failure, config.seed))
    return config


def cmd_run(args) -> int:
    config = _apply_overrides(load_config(args.config), args)
    trace = load_trace(args.trace)
    result = execute(config, trace, backend=args.backend, with_theta=args.with_theta)
    _emit(serialize(result.report, args.format), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    paths = sorted(glob.glob(args.traces))
    if not paths:
        raise UsageError(f"no traces match {args.traces!r}")
    base = _apply_overrides(load_config(args.config), args)
    axes = SweepAxes(
        thresholds=_csv_ints(args.thresholds) if args.thresholds else (),
        way_splits=_splits(args.splits) if args.splits else (),
        failure_modes=tuple(_schedule(f, base.seed) for f in args.failures.split(","))
        if args.failures else (),
        architectures=tuple(_architecture(a) for a in args.archs.split(",")) if args.archs else (),
    )
    traces = [load_trace(p) for p in paths]
    rows = sweep(base, axes, traces, jobs=args.jobs, backend=args.backend,
                 with_theta=args.with_theta)
    extra = []
    for row in rows:
        cfg = row.config
        extra.append({
            "threshold": cfg.threshold if cfg else "",
            "ways_sram": cfg.geometry.ways_sram if cfg else "",
            "ways_sttram": cfg.geometry.ways_sttram if cfg else "",
            "failure": cfg.failure.label() if cfg else "",
            "diagnostic": row.diagnostic,
        })
        if row.diagnostic:
            _err(f"{row.trace}: {row.diagnostic}")
    _emit(to_tabular([r.report for r in rows], extra), args.out)
    return EXIT_OK


def cmd_golden(args) -> int:
    engines = ["object", "compiled"] if args.engine == "both" else [args.engine]
    for name in engines:
        try:
            passed = replay(make_engine(name, args.mutant))
        except Divergence as exc:
            print(f"{name}: diverged")
            print(exc.state_diff())
            return EXIT_DIVERGED
        print(f"{name}: {' '.join(passed)} ok")
    return EXIT_OK


# constants as printed in the technology tables: cycles, nJ, mW
TABLE_CONSTANTS = {
    "sram": (1, 2, "0.006", "0.002", "18.972"),
    "sttram": (2, 10, "0.081", "0.217", "3.014"),
    "pcm": (35, 100, "1.553", "6.946", None),
}


def selftest_results():
    """(label, expected, actual) triples for the built-in constants."""
    tech = TechnologyParams()
    out = [("clock period ns", Decimal(2), tech.clock_period_ns)]
    for name, (rc, wc, re_nj, we_nj, leak_mw) in TABLE_CONSTANTS.items():
        spec = getattr(tech, name)
        out += [
            (f"{name} read cycles", rc, spec.read_cycles),
            (f"{name} write cycles", wc, spec.write_cycles),
            (f"{name} read energy", pj(Decimal(re_nj) * 1000), spec.read_energy),
            (f"{name} write energy", pj(Decimal(we_nj) * 1000), spec.write_energy),
        ]
        if leak_mw is not None:
            out.append((f"{name} leakage uW", int(Decimal(leak_mw) * 1000), spec.leakage_uw))
    ov = storage_overhead(CacheGeometry(), 4096, 7, total_cache_bytes=32 * 1024)
    out += [
        ("metadata bits", 2048, ov.metadata_bits),
        ("prediction table bits", 4096, ov.table_bits),
        ("overhead bits", 6144, ov.total_bits),
        ("overhead percent (2 dp)", "2.34", f"{ov.percent:.2f}"),
    ]
    return out


def cmd_selftest(args) -> int:
    ok = True
    for label, want, got in selftest_results():
        status = "ok" if want == got else "FAIL"
        ok &= want == got
        print(f"{status:4} {label}: expected {want}, got {got}")
    return EXIT_OK if ok else EXIT_DIVERGED


def cmd_generate(args) -> int:
    spec = SyntheticTraceSpec(args.records, args.write_fraction, args.hot_blocks,
                              args.hot_fraction, args.space_blocks, args.gap_fraction, args.seed)
    trace = generate_synthetic(spec, Path(args.out).name)
    save_trace(trace, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hybridsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default="default", help="config file, or 'default'")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="write the report here instead of stdout")
        p.add_argument("--with-theta", action="store_true",
                       help="also run without failures to report energy efficiency")
        p.add_argument("--backend", choices=("fast", "reference"), default="fast")

    p = sub.add_parser("run", help="simulate one trace")
    common(p)
    p.add_argument("--trace", required=True)
    p.add_argument("--arch", default=None)
    p.add_argument("--failure", default=None, help="none | period:N | random:LO:HI")
    p.add_argument("--format", choices=FORMATS, default="nested")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="simulate the Cartesian product of parameter axes")
    common(p)
    p.add_argument("--traces", required=True, help="glob of trace files")
    p.add_argument("--thresholds", default=None, help="e.g. 1,3,7,15")
    p.add_argument("--splits", default=None, help="e.g. 0:8,2:6,4:4,6:2,8:0")
    p.add_argument("--failures", default=None, help="e.g. none,period:2000,random:2000:4000")
    p.add_argument("--archs", default=None, help="comma-separated architectures")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("golden", help="replay the built-in worked example")
    p.add_argument("--engine", choices=("object", "compiled", "both"), default="both")
    p.add_argument("--mutant", choices=sorted(MUTANTS), default=None,
                   help="replay against a deliberately broken object engine")
    p.set_defaults(func=cmd_golden)

    p = sub.add_parser("selftest", help="check the built-in technology constants")
    p.set_defaults(func=cmd_selftest)

    p = sub.add_parser("generate", help="write a synthetic trace")
    p.add_argument("--out", required=True, help="trace path (.gz compresses)")
    p.add_argument("--records", type=int, default=100_000)
    p.add_argument("--write-fraction", type=float, default=0.3)
    p.add_argument("--hot-blocks", type=int, default=128)
    p.add_argument("--hot-fraction", type=float, default=0.9)
    p.add_argument("--space-blocks", type=int, default=1 << 16)
    p.add_argument("--gap-fraction", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "mutant", None) and args.engine != "object":
        args.engine = "object"
    try:
        return args.func(args)
    except (ConfigError, TraceParseError, UsageError) as exc:
        _err(str(exc))
        return EXIT_PARSE
    except GeometryError as exc:
        _err(str(exc))
        return EXIT_INVALID
    except SimulationError as exc:
        _err(str(exc))
        return EXIT_DIVERGED
    except OSError as exc:
        _err(str(exc))
        return EXIT_PARSE
    except ValueError as exc:
        if args.command == "generate":
            _err(str(exc))
            return EXIT_PARSE
        raise


if __name__ == "__main__":
    sys.exit(main())
