from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from binsim.model import fraction_at_least, gap, level_fractions, majorizes

loads_st = st.lists(st.integers(0, 20), min_size=1, max_size=12)


@pytest.mark.parametrize(
    "loads, expected",
    [([2, 1, 1, 0], 1), ([5, 0, 0, 0], Fraction(15, 4)), ([3, 3, 3], 0), ([0], 0)],
)
def test_gap_examples(loads, expected):
    assert gap(loads) == expected


def test_gap_rejects_empty():
    with pytest.raises(ValueError):
        gap([])


@given(loads_st)
def test_gap_nonnegative_zero_iff_flat(loads):
    g = gap(loads)
    assert g >= 0
    assert (g == 0) == (len(set(loads)) == 1)


def test_fraction_at_least():
    assert fraction_at_least([3, 2, 2, 1], 2) == Fraction(3, 4)
    assert fraction_at_least([0, 0], 1) == 0
    assert fraction_at_least([4, 0, 9], 0) == 1
    with pytest.raises(ValueError):
        fraction_at_least([1], -1)


@given(loads_st)
def test_level_fractions_match_fraction_at_least(loads):
    v = level_fractions(loads)
    assert v[0] == 1
    assert all(a >= b for a, b in zip(v, v[1:]))
    assert len(v) - 1 == max(loads)
    for i, x in enumerate(v):
        assert x == float(fraction_at_least(loads, i))


@pytest.mark.parametrize(
    "u, v, expected",
    [([3, 1, 0], [2, 1, 1], True), ([2, 2, 0], [3, 1, 0], False), ([0, 1, 3], [1, 2, 1], True)],
)
def test_majorizes_examples(u, v, expected):
    assert majorizes(u, v) is expected


def test_majorizes_length_mismatch():
    with pytest.raises(ValueError):
        majorizes([1, 2], [1, 2, 3])


@given(loads_st)
def test_majorizes_reflexive(u):
    assert majorizes(u, u)
    assert majorizes(u, list(reversed(u)))


@given(st.integers(1, 8).flatmap(lambda n: st.tuples(
    st.lists(st.integers(0, 5), min_size=n, max_size=n),
    st.lists(st.integers(0, 5), min_size=n, max_size=n),
)))
def test_majorizes_antisymmetric(pair):
    u, v = pair
    if majorizes(u, v) and majorizes(v, u):
        assert sorted(u) == sorted(v)
