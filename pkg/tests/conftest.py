import numpy as np
import pytest

from hybridsim.core import BlockMeta, CacheGeometry
from hybridsim.trace import Op, Trace

# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def record_criterion():
    def record(num, ok, detail=""):
        ACCEPTANCE[num] = (bool(ok), detail)
        print(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")
    return record


ONE_SET = CacheGeometry(capacity_bytes=256, block_size=64, ways_sram=2, ways_sttram=2)


def block_addr(n, geo=ONE_SET):
    return n * geo.block_size


def place(cache, way, block, set_index=0, **fields):
    """Put block number ``block`` into ``way`` with the given metadata."""
    geo = cache.geometry
    b = cache.sets[set_index][way]
    b.valid = True
    b.tag = block // geo.sets
    for k, v in fields.items():
        setattr(b, k, v)
    return b


def make_trace(records, name="t"):
    """Trace from a compact list: ("R", addr) / ("W", addr) / ("I", n)."""
    ops = {"R": Op.READ, "W": Op.WRITE, "I": Op.GAP}
    return Trace(np.array([ops[k] for k, _ in records], np.int8),
                 np.array([v for _, v in records], np.int64), name)
