import numpy as np
import pytest
from hypothesis import given, strategies as st

from pymentropy import (
    CountData, DomainError, Multiplicities, as_multiplicities, coincidences, from_samples,
    to_multiplicities,
)


def test_from_samples_and_multiplicities():
    c = from_samples("aabbbcd")
    assert c.N == 7 and c.K == 4
    assert to_multiplicities(c).entries == {1: 2, 2: 1, 3: 1}
    assert coincidences(c) == 3


def test_multiplicities_sorted_and_frozen():
    m = Multiplicities([5, 1, 2], [1, 3, 2])
    assert m.freqs.tolist() == [1, 2, 5]
    assert m.mults.tolist() == [3, 2, 1]
    assert (m.N, m.K, m.M) == (12, 6, 5)
    with pytest.raises(ValueError):
        m.freqs[0] = 9


@pytest.mark.parametrize("freqs,mults", [([1, 1], [1, 2]), ([0], [1]), ([1], [0]), ([1, 2], [1])])
def test_multiplicities_validation(freqs, mults):
    with pytest.raises(DomainError):
        Multiplicities(freqs, mults)


@pytest.mark.parametrize("bad", [{"a": 0}, {"a": -2}, {"a": 1.5}])
def test_count_validation(bad):
    with pytest.raises(DomainError):
        CountData.from_counts(bad)


def test_empty_counts():
    c = CountData.from_counts({})
    assert c.N == 0 and c.K == 0
    assert c.multiplicities.N == 0


def test_as_multiplicities_accepts_all_forms():
    ref = {1: 1, 2: 1, 3: 1}
    for form in ({"x": 3, "y": 2, "z": 1}, [3, 2, 1], np.array([1, 2, 3]),
                 CountData.from_counts({"x": 3, "y": 2, "z": 1}), Multiplicities.from_mapping(ref)):
        assert as_multiplicities(form).entries == ref


@given(st.lists(st.integers(1, 50), min_size=1, max_size=40))
def test_roundtrip_through_multiplicities(counts):
    m = as_multiplicities(counts)
    assert sorted(m.expand().tolist()) == sorted(counts)
    back = CountData.from_multiplicities(m)
    assert back.multiplicities == m
    assert hash(back.multiplicities) == hash(m)
    assert m.N == sum(counts) and m.K == len(counts)
