import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import ONE_SET, block_addr, place
from hybridsim.core import BlockMeta, CacheGeometry, Region, Tech
from hybridsim.policy import Classification, EventKind, HybridCache, select_victim
from hybridsim.trace import Op


def cache(**kw):
    return HybridCache(ONE_SET, kw.pop("threshold", 7), kw.pop("entries", 4096), **kw)


def where(c, block):
    _, way = c.lookup(block_addr(block))
    return way


def test_read_hit_increments_ric():
    c = cache()
    place(c, 0, 0, ric=1)
    out = c.access(Op.READ, 0)
    assert out.classification == Classification.HIT_SRAM
    assert c.sets[0][0].ric == 2


def test_sttram_read_hit_event():
    c = cache()
    place(c, 2, 1)
    out = c.access(Op.READ, block_addr(1))
    assert out.classification == Classification.HIT_STTRAM
    assert [(e.kind, e.tech) for e in out.events] == [(EventKind.READ, Tech.STTRAM)]


def test_sram_read_threshold_migrates_to_free_sttram_way():
    c = cache()
    place(c, 0, 0, ric=6, wic=2, conf=1)
    out = c.access(Op.READ, 0)
    way = where(c, 0)
    assert c.region_of(way) == Region.STTRAM
    b = c.sets[0][way]
    assert (b.ric, b.wic, b.conf) == (0, 0, 0)
    assert [e.kind for e in out.events] == [EventKind.READ, EventKind.MIGRATE_OUT,
                                             EventKind.MIGRATE_IN]
    assert not c.sets[0][0].valid


def test_sttram_read_threshold_advances_conf():
    c = cache()
    place(c, 2, 1, ric=6)
    c.access(Op.READ, block_addr(1))
    b = c.sets[0][2]
    assert (b.ric, b.conf) == (0, 1)


def test_conf3_saturates_without_trigger():
    c = cache()
    place(c, 2, 1, ric=7, conf=3)
    out = c.access(Op.READ, block_addr(1))
    b = c.sets[0][2]
    assert (b.ric, b.conf, where(c, 1)) == (7, 3, 2)
    assert [(e.kind, e.tech) for e in out.events] == [(EventKind.READ, Tech.STTRAM)]
    place(c, 0, 2, wic=7, conf=3)
    c.access(Op.WRITE, block_addr(2), 5)
    assert (c.sets[0][0].wic, where(c, 2)) == (7, 0)


def test_write_threshold_in_sttram_evicts_lowest_wic_sram_block():
    c = cache()
    place(c, 0, 0, ric=3, wic=1)  # a
    place(c, 1, 2)  # c
    place(c, 2, 1, wic=6)  # b
    out = c.access(Op.WRITE, block_addr(1), 42)
    assert where(c, 2) is None
    b = c.sets[0][1]
    assert (b.tag, b.ric, b.wic, b.conf, b.dirty, b.content) == (1, 0, 0, 0, True, 42)
    assert c.prediction[2] == 1
    kinds = [e.kind for e in out.events]
    assert kinds == [EventKind.WRITE, EventKind.MIGRATE_OUT, EventKind.MIGRATE_IN]


def test_write_threshold_in_sram_advances_conf():
    c = cache()
    place(c, 1, 2, wic=6)
    c.access(Op.WRITE, block_addr(2), 1)
    b = c.sets[0][1]
    assert (b.wic, b.conf, b.dirty) == (0, 1, True)


def test_write_hit_below_threshold():
    c = cache()
    place(c, 0, 0, wic=2)
    out = c.access(Op.WRITE, 0, 9)
    b = c.sets[0][0]
    assert (b.dirty, b.wic, b.content, b.conf) == (True, 3, 9, 0)
    assert len(out.events) == 1


def test_miss_with_pr0_evicts_lowest_ric_sttram_block():
    c = cache()
    place(c, 2, 0, ric=4)  # a
    place(c, 3, 4)  # d
    c.prediction[3] = 0
    out = c.access(Op.READ, block_addr(3))
    assert out.classification == Classification.MISS
    assert where(c, 4) is None and where(c, 3) == 3
    b = c.sets[0][3]
    assert (b.ric, b.wic, b.conf, b.dirty) == (1, 0, 0, False)
    assert c.prediction[4] == 0
    assert [e.kind for e in out.events] == [EventKind.FETCH, EventKind.FILL]
    assert out.events[1].tech == Tech.STTRAM


def test_first_miss_goes_to_sram():
    c = cache()
    out = c.access(Op.WRITE, block_addr(7), 3)
    assert c.region_of(where(c, 7)) == Region.SRAM
    assert [e.kind for e in out.events] == [EventKind.FETCH, EventKind.FILL, EventKind.WRITE]
    b = c.sets[0][where(c, 7)]
    assert (b.wic, b.dirty, b.content) == (1, True, 3)


def test_miss_takes_content_from_memory():
    mem = {block_addr(5): 77}
    c = HybridCache(ONE_SET, memory=mem)
    c.access(Op.READ, block_addr(5) + 8)
    assert c.sets[0][where(c, 5)].content == 77


def _blocks(**metrics):
    out = []
    for ric, wic in zip(metrics.get("ric", ()), metrics.get("wic", ())):
        out.append(BlockMeta(valid=True, ric=ric, wic=wic))
    return out


def test_select_victim_examples():
    blocks = [BlockMeta(valid=True) for _ in range(2)] + _blocks(ric=[4, 0], wic=[0, 0])
    assert select_victim(blocks, range(2, 4), "ric") == 3
    assert select_victim(_blocks(ric=[0, 0], wic=[0, 0]), range(2), "wic") == 0
    six_two = _blocks(ric=[0] * 3, wic=[3, 1, 2])
    assert select_victim(six_two, range(3), "wic") == 1
    assert select_victim(_blocks(ric=[1, 0], wic=[0, 2]), range(2), "ric+wic") == 0


def test_select_victim_rejects_free_way():
    with pytest.raises(ValueError):
        select_victim([BlockMeta(valid=True), BlockMeta()], range(2), "ric")


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 7), st.integers(0, 7)), min_size=1, max_size=8),
       st.sampled_from(["ric", "wic", "ric+wic"]))
def test_select_victim_matches_min_scan(metrics, metric):
    blocks = [BlockMeta(valid=True, ric=r, wic=w) for r, w in metrics]
    key = {"ric": lambda b: b.ric, "wic": lambda b: b.wic, "ric+wic": lambda b: b.ric + b.wic}[metric]
    keys = [key(b) for b in blocks]
    assert select_victim(blocks, range(len(blocks)), metric) == keys.index(min(keys))


@pytest.mark.parametrize("way,dirty,pr,writes", [(1, True, 1, 1), (2, False, 0, 0),
                                                  (0, False, 1, 0)])
def test_evict_block(way, dirty, pr, writes):
    c = cache()
    place(c, way, 6, dirty=dirty, content=11 if dirty else 0)
    c.prediction[6] = 1 - pr
    events = c.evict_block(0, way)
    assert c.prediction[6] == pr
    assert sum(e.kind == EventKind.WRITEBACK for e in events) == writes
    assert not c.sets[0][way].valid
    assert (c.memory.get(block_addr(6)) == 11) == dirty


def test_evict_invalid_raises():
    with pytest.raises(ValueError):
        cache().evict_block(0, 0)


def test_write_id_contract():
    c = cache()
    with pytest.raises(ValueError):
        c.access(Op.WRITE, 0)
    with pytest.raises(ValueError):
        c.access(Op.READ, 0, 3)


GEOS = [ONE_SET, CacheGeometry(1024, 64, 1, 3), CacheGeometry(2048, 64, 6, 2)]


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(GEOS), st.integers(1, 8), st.integers(1, 16),
       st.lists(st.tuples(st.booleans(), st.integers(0, 40)), max_size=300))
def test_invariants_hold_on_random_streams(geo, threshold, entries, stream):
    c = HybridCache(geo, threshold, entries)
    written = {}
    for i, (is_write, block) in enumerate(stream, 1):
        addr = block * geo.block_size
        pr_before = c.prediction[c.prediction.index(addr, geo.block_size)]
        hit = c.lookup(addr)[1] is not None
        if is_write:
            out = c.access(Op.WRITE, addr, i)
            written[addr] = i
        else:
            out = c.access(Op.READ, addr)
        if not hit:
            fill = next(e for e in out.events if e.kind == EventKind.FILL)
            assert (fill.tech == Tech.STTRAM) == (pr_before == 0)
        for kind in (EventKind.MIGRATE_OUT, EventKind.MIGRATE_IN):
            assert sum(e.kind == kind for e in out.events) <= 1
        for s, blocks in enumerate(c.sets):
            tags = [b.tag for b in blocks if b.valid]
            assert len(tags) == len(set(tags))
            for b in blocks:
                assert b.ric <= threshold and b.wic <= threshold and 0 <= b.conf <= 3
    # dirty data is never dropped: cache plus memory holds every last write
    for addr, wid in written.items():
        s, way = c.lookup(addr)
        held = c.sets[s][way].content if way is not None and c.sets[s][way].dirty else None
        assert held == wid or c.memory.get(addr) == wid


def test_write_trigger_in_sttram_lands_in_sram():
    c = HybridCache(ONE_SET, 3)
    place(c, 2, 1)
    for i in range(3):
        c.access(Op.WRITE, block_addr(1), i + 1)
    assert c.region_of(where(c, 1)) == Region.SRAM
