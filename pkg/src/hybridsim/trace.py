"""Memory-access traces: text format, in-memory arrays and a seeded synthetic generator.

Line grammar::

    R <hex-address>      read   (optional 0x prefix)
    W <hex-address>      write
    I <decimal-count>    run of non-memory instructions
    # comment / blank

Every R/W line is one instruction; ``I n`` advances the instruction counter by n.
"""

from __future__ import annotations

import gzip
import io
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple

import numpy as np

from .core import ADDRESS_BITS


class Op(IntEnum):
    READ = 0
    WRITE = 1
    GAP = 2


_LETTER = {Op.READ: "R", Op.WRITE: "W", Op.GAP: "I"}
_FROM_LETTER = {"R": Op.READ, "W": Op.WRITE, "I": Op.GAP}


class TraceParseError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class TraceRangeError(TraceParseError):
    pass


class AccessRecord(NamedTuple):
    op: Op
    address: int | None  # None for gaps
    count: int  # instructions covered: 1 for R/W, n for gaps
    instruction_index: int  # cumulative count including this record


class Trace:
    """A sequence of :class:`AccessRecord` held as two parallel numpy arrays.

    ``ops`` is int8 (:class:`Op` values); ``values`` is the address for R/W
    records and the instruction count for gaps.
    """

    def __init__(self, ops, values, name: str = ""):
        self.ops = np.ascontiguousarray(ops, dtype=np.int8)
        self.values = np.ascontiguousarray(values, dtype=np.int64)
        if self.ops.shape != self.values.shape or self.ops.ndim != 1:
            raise ValueError("ops and values must be 1-d arrays of equal length")
        self.name = name
        self._instr = None

    @classmethod
    def from_records(cls, records: Iterable, name: str = "") -> "Trace":
        ops, values = [], []
        for rec in records:
            op = Op(rec[0])
            ops.append(op)
            values.append(rec[2] if op == Op.GAP else rec[1])
        return cls(np.array(ops, dtype=np.int8), np.array(values, dtype=np.int64), name)

    @property
    def instruction_index(self) -> np.ndarray:
        if self._instr is None:
            steps = np.where(self.ops == Op.GAP, self.values, 1)
            self._instr = np.cumsum(steps, dtype=np.int64)
        return self._instr

    @property
    def total_instructions(self) -> int:
        return int(self.instruction_index[-1]) if len(self) else 0

    def write_ids(self) -> np.ndarray:
        """Content tag carried by each write: its instruction index (0 elsewhere)."""
        return np.where(self.ops == Op.WRITE, self.instruction_index, 0)

    def __len__(self):
        return len(self.ops)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return Trace(self.ops[i], self.values[i], self.name)
        op = Op(int(self.ops[i]))
        idx = int(self.instruction_index[i])
        if op == Op.GAP:
            return AccessRecord(op, None, int(self.values[i]), idx)
        return AccessRecord(op, int(self.values[i]), 1, idx)

    def __iter__(self) -> Iterator[AccessRecord]:
        instr = self.instruction_index.tolist()
        for op, val, idx in zip(self.ops.tolist(), self.values.tolist(), instr):
            if op == Op.GAP:
                yield AccessRecord(Op.GAP, None, val, idx)
            else:
                yield AccessRecord(Op(op), val, 1, idx)

    def __eq__(self, other):
        if isinstance(other, Trace):
            return np.array_equal(self.ops, other.ops) and np.array_equal(self.values, other.values)
        if isinstance(other, (list, tuple)):
            return list(self) == list(other)
        return NotImplemented

    def __repr__(self):
        return f"Trace({self.name!r}, {len(self)} records, {self.total_instructions} instructions)"


def parse_trace(stream, name: str = "", address_bits: int = ADDRESS_BITS) -> Trace:
    """Parse trace text from a string or a text stream."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    limit = 1 << address_bits
    ops, values = [], []
    for lineno, raw in enumerate(stream, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2 or parts[0] not in _FROM_LETTER:
            raise TraceParseError(lineno, f"malformed record {line!r}")
        op = _FROM_LETTER[parts[0]]
        tok = parts[1]
        try:
            if op == Op.GAP:
                if not tok.isdigit():
                    raise ValueError
                value = int(tok)
            else:
                value = int(tok, 16)
        except ValueError:
            raise TraceParseError(lineno, f"bad operand {tok!r}") from None
        if op == Op.GAP:
            if value < 1:
                raise TraceParseError(lineno, "gap count must be >= 1")
        elif value < 0 or value >= limit:
            raise TraceRangeError(lineno, f"address {tok} outside the {address_bits}-bit space")
        ops.append(op)
        values.append(value)
    return Trace(np.array(ops, dtype=np.int8), np.array(values, dtype=np.int64), name)


def emit_trace(records) -> str:
    if not isinstance(records, Trace):
        records = Trace.from_records(records)
    lines = []
    for op, val in zip(records.ops.tolist(), records.values.tolist()):
        if op == Op.GAP:
            lines.append(f"I {val}")
        else:
            lines.append(f"{_LETTER[Op(op)]} 0x{val:x}")
    return "".join(line + "\n" for line in lines)


def _open_text(path, mode):
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, mode + "t", encoding="utf-8", newline="")
    return open(path, mode, encoding="utf-8", newline="")


def load_trace(path, address_bits: int = ADDRESS_BITS) -> Trace:
    with _open_text(path, "r") as fh:
        return parse_trace(fh, name=Path(path).name, address_bits=address_bits)


def save_trace(trace, path):
    with _open_text(path, "w") as fh:
        fh.write(emit_trace(trace))


@dataclass(frozen=True)
class SyntheticTraceSpec:
    record_count: int = 10_000
    write_fraction: float = 0.3
    hot_set_blocks: int = 64
    hot_fraction: float = 0.9
    address_space_blocks: int = 1 << 16
    gap_fraction: float = 0.0
    seed: int = 1
    block_size: int = 64

    def __post_init__(self):
        for name in ("write_fraction", "hot_fraction", "gap_fraction"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        for name in ("record_count", "hot_set_blocks", "address_space_blocks", "block_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


def generate_synthetic(spec: SyntheticTraceSpec, name: str = "") -> Trace:
    """Draw a trace from the SplitMix64 stream seeded by ``spec.seed``.

    Per record: one draw decides gap vs access (gap length 1..16 takes another
    draw); an access draws hot vs cold pool, a block within the pool, then
    read vs write. The hot pool is blocks [0, hot_set_blocks), the cold pool
    is the whole address space.
    """
    from ._kernel import generate_records

    ops = np.empty(spec.record_count, dtype=np.int8)
    values = np.empty(spec.record_count, dtype=np.int64)
    generate_records(ops, values, np.uint64(spec.seed & ((1 << 64) - 1)),
                     spec.write_fraction, spec.hot_fraction, spec.gap_fraction,
                     spec.hot_set_blocks, spec.address_space_blocks, spec.block_size)
    return Trace(ops, values, name or f"synthetic-{spec.seed}")
