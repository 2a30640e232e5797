"""Report serialization: nested ``section.key = value`` text and CSV tables.

Energies are written as exact decimal picojoule strings, durations as exact
decimals and ratios with ``repr`` so every value parses back unchanged.
Absent values are written as ``none`` (nested) or an empty cell (CSV).
"""

from __future__ import annotations

import csv
import io
import typing
from decimal import Decimal

from .core import format_pj, parse_pj
from .energy import RunReport

ENERGY_FIELDS = frozenset({"e_exec", "e_backup", "e_restore", "e_overall", "e_normal", "e_flush"})

SECTIONS = {
    "run": ("architecture", "trace", "config_fingerprint", "version", "records", "instructions"),
    "time": ("cycles", "exec_time_ns", "avg_backup_time_ns"),
    "energy": ("e_exec", "e_backup", "e_restore", "e_overall", "e_normal", "e_flush",
               "static_energy_pj"),
    "ratio": ("eta", "theta", "sttram_write_ratio"),
    "backup": ("failures", "backup_episodes", "n_w_l1", "n_w_main", "n_r_l1", "n_r_main",
               "safe_points", "rewinds", "reexecuted_records", "flush_writebacks"),
    "traffic": ("sram_reads", "sram_writes", "sttram_reads", "sttram_writes", "pcm_reads",
                "pcm_writes", "gap_instructions"),
    "cache": ("hits_sram", "hits_sttram", "misses", "migrations_to_sttram",
              "migrations_to_sram"),
}

_SECTION_OF = {name: sec for sec, names in SECTIONS.items() for name in names}
_HINTS = typing.get_type_hints(RunReport)

FORMATS = ("nested", "tabular")


class ReportParseError(ValueError):
    pass


def _kind(name):
    if name in ENERGY_FIELDS:
        return "pj"
    hint = _HINTS[name]
    for kind in (str, int, float, Decimal):
        if hint is kind or kind in typing.get_args(hint):
            return kind
    raise TypeError(f"no serializer for {name}: {hint}")


def format_value(name, value) -> str:
    if value is None:
        return ""
    kind = _kind(name)
    if kind == "pj":
        return format_pj(value)
    if kind is float:
        return repr(float(value))
    return str(value)


def parse_value(name, text: str):
    if text in ("", "none"):
        return None
    kind = _kind(name)
    try:
        if kind == "pj":
            return parse_pj(text)
        if kind is str:
            return text
        return kind(text)
    except (ArithmeticError, ValueError) as exc:
        raise ReportParseError(f"bad value for {name}: {text!r}") from exc


def to_nested(report: RunReport) -> str:
    lines = []
    for name in RunReport.field_names():
        text = format_value(name, getattr(report, name))
        lines.append(f"{_SECTION_OF[name]}.{name} = {text or 'none'}")
    return "\n".join(lines) + "\n"


def from_nested(text: str) -> RunReport:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        section, _, name = key.strip().partition(".")
        if not sep or _SECTION_OF.get(name) != section:
            raise ReportParseError(f"line {lineno}: unexpected {raw!r}")
        values[name] = parse_value(name, value.strip())
    missing = set(RunReport.field_names()) - set(values)
    if missing:
        raise ReportParseError(f"missing fields: {sorted(missing)}")
    return RunReport(**values)


SWEEP_COLUMNS = ("threshold", "ways_sram", "ways_sttram", "failure", "diagnostic")


def to_tabular(reports, extra=None) -> str:
    """CSV with one row per report. ``extra`` is an optional list of dicts
    with :data:`SWEEP_COLUMNS` keys, one per report (a report may be None)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    names = RunReport.field_names()
    header = list(names) + (list(SWEEP_COLUMNS) if extra is not None else [])
    writer.writerow(header)
    for i, report in enumerate(reports):
        if report is None:
            row = [""] * len(names)
        else:
            row = [format_value(n, getattr(report, n)) for n in names]
        if extra is not None:
            row += [str(extra[i].get(c, "")) for c in SWEEP_COLUMNS]
        writer.writerow(row)
    return buf.getvalue()


def from_tabular(text: str) -> list:
    """Reports from CSV text; rows without a report come back as None."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        return []
    header, names = rows[0], RunReport.field_names()
    if header[:len(names)] != names:
        raise ReportParseError("unexpected CSV header")
    out = []
    for row in rows[1:]:
        cells = row[:len(names)]
        if not any(cells):
            out.append(None)
            continue
        out.append(RunReport(**{n: parse_value(n, c) for n, c in zip(names, cells)}))
    return out


def serialize(report: RunReport, fmt: str = "nested") -> str:
    if fmt == "nested":
        return to_nested(report)
    if fmt == "tabular":
        return to_tabular([report])
    raise ValueError(f"unknown report format {fmt!r}")
