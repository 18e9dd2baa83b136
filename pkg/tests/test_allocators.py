import itertools
import math

import pytest
from hypothesis import given, settings, strategies as st

from binsim.allocators import (
    Algorithm,
    Regime,
    SimConfig,
    choose_firstdiff,
    place_firstdiff,
    place_greedy,
    place_left,
    place_uniform,
    run,
    theoretical_k,
)
from binsim.model import PlacementCase
from binsim.probes import ProbeStream, ScriptedProbes, substream


class Recording:
    """Wraps a stream and remembers what was probed."""

    def __init__(self, inner):
        self.inner = inner
        self.probed = []

    def next_probe(self, n):
        x = self.inner.next_probe(n)
        self.probed.append(x)
        return x


# FirstDiff examples


def test_firstdiff_zero_bin_first_probe():
    loads = [0, 5, 5, 5]
    rec = place_firstdiff(loads, ScriptedProbes([0]), 4)
    assert (rec.chosen_bin, rec.probes_used, rec.case) == (0, 1, PlacementCase.ZERO_BIN)
    assert loads == [1, 5, 5, 5]


def test_firstdiff_all_equal_goes_to_last_probe():
    loads = [3, 3, 3, 3]
    rec = place_firstdiff(loads, ScriptedProbes([1, 2, 0]), 3)
    assert (rec.chosen_bin, rec.probes_used, rec.case) == (0, 3, PlacementCase.ALL_EQUAL)


def test_firstdiff_high_then_low():
    rec = place_firstdiff([2, 2, 1, 2], ScriptedProbes([0, 2]), 5)
    assert (rec.chosen_bin, rec.probes_used, rec.case) == (2, 2, PlacementCase.HIGH_THEN_LOW)


def test_firstdiff_low_then_high_takes_latest_low_probe():
    rec = place_firstdiff([1, 1, 3, 1], ScriptedProbes([0, 3, 2]), 5)
    assert (rec.chosen_bin, rec.probes_used, rec.case) == (3, 3, PlacementCase.LOW_THEN_HIGH)


def test_firstdiff_zero_after_equal_loads_is_high_then_low():
    rec = place_firstdiff([2, 2, 0], ScriptedProbes([0, 1, 2]), 5)
    assert (rec.chosen_bin, rec.probes_used, rec.case) == (2, 3, PlacementCase.HIGH_THEN_LOW)


def test_firstdiff_needs_k_at_least_two():
    with pytest.raises(ValueError):
        place_firstdiff([1, 1], ScriptedProbes([0, 1]), 1)


def test_firstdiff_distinct_probes_skip_repeats():
    rec = choose_firstdiff([1, 1, 2], ScriptedProbes([0, 0, 0, 1, 2]), 3, distinct=True)
    assert (rec.chosen_bin, rec.probes_used, rec.case) == (1, 3, PlacementCase.LOW_THEN_HIGH)


def _exact_two_bin_expectation(k):
    # enumerate every length-k probe sequence over bins {0, 1} with loads (1, 2)
    total = 0
    for seq in itertools.product((0, 1), repeat=k):
        used = next((j + 1 for j in range(1, k) if seq[j] != seq[0]), k)
        total += used
    return total / 2**k


def test_two_bin_probe_count_matches_enumeration():
    k = 5
    exact = _exact_two_bin_expectation(k)
    assert exact == pytest.approx(1 + sum(0.5 ** (t - 1) for t in range(1, k)))
    s = ProbeStream(11)
    trials = 10**6
    total = sum(choose_firstdiff([1, 2], s, k, ball_index=1).probes_used for _ in range(trials))
    assert total / trials == pytest.approx(exact, rel=0.01)


# Greedy / Left / Uniform


def test_greedy_picks_minimum():
    rec = place_greedy([4, 2], ScriptedProbes([0, 1]), 2)
    assert rec.chosen_bin == 1 and rec.probes_used == 2


def test_greedy_one_probe_is_uniform():
    loads = [3, 0, 7]
    rec = place_greedy(loads, ScriptedProbes([2]), 1)
    assert rec.chosen_bin == 2 and loads == [3, 0, 8]


def test_greedy_tie_goes_to_first_probe():
    rec = place_greedy([3, 3, 3], ScriptedProbes([2, 0]), 2)
    assert rec.chosen_bin == 2 and rec.case is PlacementCase.ALL_EQUAL


def test_left_picks_minimum_across_groups():
    loads = [0, 2, 0, 1]
    rec = place_left(loads, ScriptedProbes([1, 1]), 2)
    assert rec.chosen_bin == 3


def test_left_ties_go_left():
    assert place_left([1, 1, 1, 1], ScriptedProbes([1, 0]), 2).chosen_bin == 1
    assert place_left([0, 0, 0, 0], ScriptedProbes([0, 1]), 2).chosen_bin == 0


def test_left_needs_divisible_n():
    with pytest.raises(ValueError):
        place_left([0] * 5, ScriptedProbes([0, 0]), 2)
    with pytest.raises(ValueError):
        SimConfig(n=5, m=5, algorithm="left", d=2)


def test_uniform_and_greedy1_agree():
    n, m = 64, 500
    a = [0] * n
    b = [0] * n
    s1, s2 = ProbeStream(3), ProbeStream(3)
    for _ in range(m):
        assert place_uniform(a, s1).chosen_bin == place_greedy(b, s2, 1).chosen_bin
    assert a == b


# invariants over random states


@settings(max_examples=200, deadline=None)
@given(
    loads=st.lists(st.integers(0, 4), min_size=1, max_size=10),
    k=st.integers(2, 12),
    seed=st.integers(0, 2**32),
)
def test_firstdiff_invariants(loads, k, seed):
    stream = Recording(ProbeStream(seed))
    rec = choose_firstdiff(loads, stream, k, ball_index=1)
    assert 1 <= rec.probes_used <= k
    assert len(stream.probed) == rec.probes_used
    assert rec.chosen_bin in stream.probed
    assert loads[rec.chosen_bin] == min(loads[b] for b in stream.probed)
    if rec.probes_used == 1:
        assert rec.case is PlacementCase.ZERO_BIN
    if rec.case is PlacementCase.ALL_EQUAL:
        assert rec.probes_used == k
    if rec.case is PlacementCase.ZERO_BIN:
        assert loads[stream.probed[0]] == 0


@settings(max_examples=100, deadline=None)
@given(
    algo=st.sampled_from(list(Algorithm)),
    n=st.sampled_from([1, 2, 4, 6, 12]),
    m=st.integers(0, 60),
    seed=st.integers(0, 2**32),
)
def test_run_invariants(algo, n, m, seed):
    d = 2 if algo is Algorithm.LEFT else 3
    if algo is Algorithm.LEFT and n % d:
        return
    if algo is Algorithm.LEFT and n == 1:
        return
    cfg = SimConfig(n=n, m=m, algorithm=algo, d=d, k=4, seed=seed)
    loads, stats, records = run(cfg)
    assert sum(loads) == m and all(x >= 0 for x in loads)
    assert stats.total_probes == sum(r.probes_used for r in records)
    assert stats.total_probes == sum(p * c for p, c in stats.probe_histogram.items())
    assert [r.ball_index for r in records] == list(range(1, m + 1))
    v = stats.level_fractions
    assert v[0] == 1 and all(a >= b for a, b in zip(v, v[1:]))
    assert stats.max_load == max(i for i, x in enumerate(v) if x > 0) == max(loads)
    assert len(stats.gap_series) == m // n
    assert all(1 <= r.probes_used <= cfg.max_probes for r in records)


def test_run_empty():
    loads, stats, records = run(SimConfig(n=8, m=0))
    assert loads == [0] * 8 and records == [] and stats.max_load == 0
    assert stats.level_fractions == [1.0]


def test_run_is_deterministic():
    cfg = SimConfig(n=256, m=256, algorithm="uniform", seed=77)
    a, b = run(cfg), run(cfg)
    assert a[0] == b[0] and a[1] == b[1] and a[2] == b[2]


def test_run_gap_series_cadence():
    _, stats, _ = run(SimConfig(n=10, m=35, algorithm="greedy", d=2), gap_every=5)
    assert [t for t, _ in stats.gap_series] == [5, 10, 15, 20, 25, 30, 35]
    _, stats, _ = run(SimConfig(n=10, m=35), gap_every=0)
    assert stats.gap_series == []


def test_probe_profile_matches_records():
    _, stats, records = run(SimConfig(n=16, m=64, k=6), probe_profile=True)
    assert stats.probe_profile == [r.probes_used for r in records]


def test_firstdiff_table_cell_mostly_two():
    hits = 0
    for i in range(10):
        _, stats, _ = run(SimConfig(n=4096, m=4096, d=3, k=10, seed=5), substream(5, i), keep_records=False)
        hits += stats.max_load == 2
    assert hits >= 9


def test_light_budget_at_theoretical_k():
    k = theoretical_k(4, Regime.LIGHT)
    _, stats, _ = run(SimConfig(n=4096, m=4096, d=4, k=k, seed=8), keep_records=False)
    assert stats.mean_probes <= 4


def test_heavy_budget_at_theoretical_k():
    k = theoretical_k(6, Regime.HEAVY)
    _, stats, _ = run(SimConfig(n=256, m=256 * 50, d=6, k=k, seed=8), keep_records=False)
    assert stats.mean_probes <= 6


# theoretical_k


@pytest.mark.parametrize(
    "d, regime, expected",
    [
        (6, "light", 16),
        (4, "light", math.floor(2 ** (8 / 3))),
        (6, "heavy", math.floor(2 ** (6 / 2.17))),
    ],
)
def test_theoretical_k(d, regime, expected):
    assert theoretical_k(d, regime) == expected


def test_theoretical_k_values_frozen():
    # direct evaluation: 2^(8/3) = 6.3496..., 2^(6/2.17) = 6.7993...
    assert theoretical_k(4, "light") == 6
    assert theoretical_k(6, "heavy") == 6


def test_theoretical_k_rejects_small_d():
    with pytest.raises(ValueError):
        theoretical_k(3, "light")
    with pytest.raises(ValueError):
        theoretical_k(5, "heavy")


def test_simconfig_validation():
    with pytest.raises(ValueError):
        SimConfig(n=0, m=1)
    with pytest.raises(ValueError):
        SimConfig(n=4, m=-1)
    with pytest.raises(ValueError):
        SimConfig(n=4, m=4, algorithm="firstdiff", k=1)
    with pytest.raises(ValueError):
        SimConfig(n=4, m=4, algorithm="greedy", d=0)
    with pytest.raises(ValueError):
        SimConfig(n=4, m=4, algorithm="bogus")
