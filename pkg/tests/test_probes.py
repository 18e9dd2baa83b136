import numpy as np
import pytest
from scipy import stats

from binsim.probes import ProbeStream, ScriptedProbes, next_probe, substream


def test_single_bin_always_zero():
    s = ProbeStream(5)
    assert {s.next_probe(1) for _ in range(100)} == {0}


def test_fixed_seed_repeats():
    s1, s2 = substream(42, 0), substream(42, 0)
    first = [next_probe(s1, 16) for _ in range(8)]
    assert first == [next_probe(s2, 16) for _ in range(8)]
    assert all(0 <= x < 16 for x in first)


def test_rejects_empty_range():
    with pytest.raises(ValueError):
        ProbeStream(1).next_probe(0)


def test_rejects_out_of_range_seed():
    with pytest.raises(ValueError):
        ProbeStream(2**64)
    with pytest.raises(ValueError):
        ProbeStream(-1)


def test_uniformity_chi_squared():
    s = substream(2024, 3)
    n = 64
    draws = s.take(10**6, n)
    counts = np.bincount(draws, minlength=n)
    assert stats.chisquare(counts).pvalue > 0.001


def test_substreams_differ_at_expected_rate():
    n, seeds = 16, 10**4
    differ = sum(substream(s, 0).next_probe(n) != substream(s, 1).next_probe(n) for s in range(seeds))
    rate = differ / seeds
    sd = ((n - 1) / n**2 / seeds) ** 0.5
    assert abs(rate - (n - 1) / n) < 4 * sd


def test_substream_independent_of_creation_order():
    later = [substream(9, i) for i in (3, 1, 2)]
    earlier = [substream(9, i) for i in (1, 2, 3)]
    by_id = {s.stream_id: s.take(20, 50) for s in later}
    assert all(by_id[s.stream_id] == s.take(20, 50) for s in earlier)


def test_changing_n_is_deterministic():
    def seq():
        s = ProbeStream(7, 1)
        return [s.next_probe(10), s.next_probe(3), s.next_probe(10), s.next_probe(10)]

    assert seq() == seq()


def test_scripted_probes():
    s = ScriptedProbes([2, 0])
    assert s.next_probe(4) == 2
    assert s.next_probe(4) == 0
    assert s.consumed == 2
    with pytest.raises(LookupError):
        s.next_probe(4)
    with pytest.raises(ValueError):
        ScriptedProbes([5]).next_probe(4)
