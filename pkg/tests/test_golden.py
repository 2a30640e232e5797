import time

import pytest

from hybridsim.golden import MUTANTS, Divergence, make_engine, replay

POINTS = ["A", "B", "C", "D", "E", "F", "c-miss", "G", "H", "I", "J", "K"]


@pytest.mark.parametrize("engine", ["object", "compiled"])
def test_scenario_passes(engine):
    assert replay(make_engine(engine)) == POINTS


@pytest.mark.parametrize("mutant,point", [("compare-then-increment", "D"),
                                          ("wic-gt-ric-pr", "c-miss")])
def test_mutants_diverge(mutant, point):
    with pytest.raises(Divergence) as exc:
        replay(make_engine("object", mutant))
    assert exc.value.point == point
    assert f"point {point}" in exc.value.state_diff()


def test_mutants_are_object_only():
    assert set(MUTANTS) == {"compare-then-increment", "wic-gt-ric-pr"}
    with pytest.raises(ValueError):
        make_engine("compiled", "wic-gt-ric-pr")


def test_replay_is_fast():
    replay(make_engine("compiled"))  # compile outside the clock
    start = time.perf_counter()
    replay(make_engine("object"))
    replay(make_engine("compiled"))
    assert time.perf_counter() - start < 1.0
