import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fleetcharge.allocation import (
    HallViolation,
    IntegerAllocation,
    all_roundings,
    hall_condition,
    hall_violator,
    match_vehicles,
    round_allocation,
)
from fleetcharge.feasibility import FeasibilitySets

from oracles import compositions, largest_remainder, matching_exists


def test_round_exact():
    assert round_allocation([1 / 3, 1 / 3, 1 / 3], 3).counts == (1, 1, 1)


def test_round_tie_goes_low():
    assert round_allocation([0.5, 0.5], 3).counts == (2, 1)


def test_round_sixty_vehicles():
    assert round_allocation([0.2, 0.15, 0.38, 0.27], 60).counts == (12, 9, 23, 16)


@given(
    w=st.lists(st.integers(0, 1000), min_size=1, max_size=6).filter(lambda v: sum(v) > 0),
    n=st.integers(1, 200),
)
def test_round_matches_exact_oracle(w, n):
    x = np.array(w, dtype=float) / sum(w)
    alloc = round_allocation(x, n)
    assert alloc.total == n
    for c, v in zip(alloc.counts, x * n):
        assert np.floor(v - 1e-9) <= c <= np.ceil(v + 1e-9)
    assert alloc.counts == largest_remainder([wi / sum(w) for wi in w], n)


def test_all_roundings_cover_floor_ceil():
    got = {a.counts for a in all_roundings([0.5, 0.25, 0.25], 2)}
    assert got == {(1, 1, 0), (1, 0, 1)}


def test_hall_examples():
    fs = FeasibilitySets.from_lists(1, [{1}, {1}])
    assert not hall_condition(IntegerAllocation((1, 1)), fs)
    assert hall_violator(IntegerAllocation((1, 1)), fs) == (0, 1)
    single = FeasibilitySets.from_lists(3, [{1, 2, 3}])
    assert hall_condition(IntegerAllocation((3,)), single)


def test_forced_matching():
    fs = FeasibilitySets.from_lists(2, [{1, 2}, {2}])
    a = match_vehicles(IntegerAllocation((1, 1)), fs)
    assert a.station_of == {1: 0, 2: 1}


def test_all_to_one_station():
    fs = FeasibilitySets.from_lists(4, [{1, 2, 3, 4}, {1}, set()])
    a = match_vehicles(IntegerAllocation((4, 0, 0)), fs)
    assert set(a.station_of.values()) == {0}


def test_violation_lists_subset():
    fs = FeasibilitySets.from_lists(3, [{1}, {1}, {1, 2, 3}])
    with pytest.raises(HallViolation) as err:
        match_vehicles(IntegerAllocation((1, 1, 1)), fs)
    S = err.value.subset
    assert sum((1, 1, 1)[j] for j in S) > fs.union_size(S)


def test_short_counts_rejected():
    fs = FeasibilitySets.from_lists(3, [{1, 2, 3}])
    with pytest.raises(ValueError):
        match_vehicles(IntegerAllocation((2,)), fs)


@st.composite
def fsets_and_counts(draw):
    m = draw(st.integers(1, 4))
    n = draw(st.integers(1, 8))
    sets = [draw(st.sets(st.integers(1, n))) for _ in range(m)]
    counts = draw(st.sampled_from(list(compositions(n, m))))
    return FeasibilitySets.from_lists(n, sets), counts


@given(case=fsets_and_counts())
def test_hall_iff_matching(case):
    fs, counts = case
    alloc = IntegerAllocation(counts)
    exists = matching_exists(counts, fs.sets, fs.vehicle_ids)
    assert hall_condition(alloc, fs) == exists
    if exists:
        a = match_vehicles(alloc, fs)
        assert a.counts(fs.m) == counts
        assert sorted(a.station_of) == list(fs.vehicle_ids)
        for v, j in a.station_of.items():
            assert v in fs.sets[j]
    else:
        with pytest.raises(HallViolation) as err:
            match_vehicles(alloc, fs)
        S = err.value.subset
        assert sum(counts[j] for j in S) > fs.union_size(S)
