"""Placement strategies and the sequential run driver.

Every ``choose_*`` function inspects a load vector through a probe source
(anything with ``next_probe(n)``) and returns a :class:`PlacementRecord`
without mutating the loads. ``place_*`` additionally drops the ball.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

from .model import (
    MAX_BALLS,
    LoadVector,
    PlacementCase,
    PlacementRecord,
    RunStats,
    classify,
    level_fractions,
)
from .probes import ProbeStream


class ProbeSource(Protocol):
    def next_probe(self, n: int) -> int: ...


class Algorithm(str, enum.Enum):
    UNIFORM = "uniform"
    GREEDY = "greedy"
    LEFT = "left"
    FIRSTDIFF = "firstdiff"


class Regime(str, enum.Enum):
    LIGHT = "light"
    HEAVY = "heavy"


@dataclass(frozen=True)
class SimConfig:
    """One simulation: ``m`` balls into ``n`` bins.

    ``k`` is the FirstDiff probe cap and is ignored by the other
    algorithms. ``d`` is recorded for FirstDiff (it is the probe budget
    the cap is meant to respect) but does not affect placement.
    """

    n: int
    m: int
    algorithm: Algorithm = Algorithm.FIRSTDIFF
    d: int = 2
    k: int = 3
    seed: int = 0
    distinct_probes: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 0 <= self.m <= MAX_BALLS:
            raise ValueError(f"m must be in [0, 2^40], got {self.m}")
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        if self.algorithm is Algorithm.FIRSTDIFF:
            if self.k < 2:
                raise ValueError(f"FirstDiff needs k >= 2, got {self.k}")
            if self.distinct_probes and self.k > self.n:
                raise ValueError("distinct probes need k <= n")
        if self.algorithm is Algorithm.LEFT:
            if self.d < 2:
                raise ValueError("Left needs d >= 2")
            if self.n % self.d:
                raise ValueError(f"Left needs d | n, got n={self.n}, d={self.d}")

    @property
    def max_probes(self) -> int:
        if self.algorithm is Algorithm.FIRSTDIFF:
            return self.k
        if self.algorithm is Algorithm.UNIFORM:
            return 1
        return self.d


def _default_index(loads: Sequence[int], ball_index: int | None) -> int:
    return sum(loads) + 1 if ball_index is None else ball_index


def choose_firstdiff(
    loads: Sequence[int],
    stream: ProbeSource,
    k: int,
    *,
    ball_index: int | None = None,
    distinct: bool = False,
) -> PlacementRecord:
    """Probe until an empty bin or a load unlike the first one, at most k times.

    On a differing load the ball goes to the least loaded probed bin; among
    several probes at that load the most recent wins. If all ``k`` probes
    see one load, the ball goes to the last probed bin.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    n = len(loads)
    seen = set() if distinct else None
    first = -1
    prev_bin = -1
    for j in range(1, k + 1):
        b = stream.next_probe(n)
        if seen is not None:
            while b in seen:
                b = stream.next_probe(n)
            seen.add(b)
        load = loads[b]
        if load == 0:
            case = PlacementCase.ZERO_BIN if j == 1 else PlacementCase.HIGH_THEN_LOW
            return PlacementRecord(_default_index(loads, ball_index), b, j, case)
        if j == 1:
            first = load
        elif load != first:
            if load < first:
                chosen, case = b, PlacementCase.HIGH_THEN_LOW
            else:
                chosen, case = prev_bin, PlacementCase.LOW_THEN_HIGH
            return PlacementRecord(_default_index(loads, ball_index), chosen, j, case)
        prev_bin = b
    return PlacementRecord(
        _default_index(loads, ball_index), prev_bin, k, PlacementCase.ALL_EQUAL
    )


def choose_greedy(
    loads: Sequence[int],
    stream: ProbeSource,
    d: int,
    *,
    ball_index: int | None = None,
) -> PlacementRecord:
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    n = len(loads)
    b = stream.next_probe(n)
    first = best = loads[b]
    chosen = b
    all_equal = True
    for _ in range(d - 1):
        b = stream.next_probe(n)
        load = loads[b]
        if load != first:
            all_equal = False
        if load < best:  # strict: earliest-probed minimum wins
            best, chosen = load, b
    case = classify(first, best, all_equal)
    return PlacementRecord(_default_index(loads, ball_index), chosen, d, case)


def choose_uniform(
    loads: Sequence[int], stream: ProbeSource, *, ball_index: int | None = None
) -> PlacementRecord:
    return choose_greedy(loads, stream, 1, ball_index=ball_index)


def choose_left(
    loads: Sequence[int],
    stream: ProbeSource,
    d: int,
    *,
    ball_index: int | None = None,
) -> PlacementRecord:
    """One probe per contiguous group; ties go to the leftmost group."""
    n = len(loads)
    if d < 2:
        raise ValueError(f"Left needs d >= 2, got {d}")
    if n % d:
        raise ValueError(f"Left needs d | n, got n={n}, d={d}")
    size = n // d
    chosen = stream.next_probe(size)
    first = best = loads[chosen]
    all_equal = True
    for g in range(1, d):
        b = g * size + stream.next_probe(size)
        load = loads[b]
        if load != first:
            all_equal = False
        if load < best:
            best, chosen = load, b
    case = classify(first, best, all_equal)
    return PlacementRecord(_default_index(loads, ball_index), chosen, d, case)


def place_firstdiff(
    loads: LoadVector, stream: ProbeSource, k: int, **kw
) -> PlacementRecord:
    rec = choose_firstdiff(loads, stream, k, **kw)
    loads[rec.chosen_bin] += 1
    return rec


def place_greedy(loads: LoadVector, stream: ProbeSource, d: int, **kw) -> PlacementRecord:
    rec = choose_greedy(loads, stream, d, **kw)
    loads[rec.chosen_bin] += 1
    return rec


def place_uniform(loads: LoadVector, stream: ProbeSource, **kw) -> PlacementRecord:
    rec = choose_uniform(loads, stream, **kw)
    loads[rec.chosen_bin] += 1
    return rec


def place_left(loads: LoadVector, stream: ProbeSource, d: int, **kw) -> PlacementRecord:
    rec = choose_left(loads, stream, d, **kw)
    loads[rec.chosen_bin] += 1
    return rec


def chooser_for(config: SimConfig) -> Callable[[Sequence[int], ProbeSource, int], PlacementRecord]:
    """Bind the algorithm parameters; result is ``f(loads, stream, ball_index)``."""
    algo = config.algorithm
    if algo is Algorithm.FIRSTDIFF:
        k, distinct = config.k, config.distinct_probes
        return lambda loads, s, i: choose_firstdiff(
            loads, s, k, ball_index=i, distinct=distinct
        )
    if algo is Algorithm.GREEDY:
        d = config.d
        return lambda loads, s, i: choose_greedy(loads, s, d, ball_index=i)
    if algo is Algorithm.LEFT:
        d = config.d
        return lambda loads, s, i: choose_left(loads, s, d, ball_index=i)
    return lambda loads, s, i: choose_uniform(loads, s, ball_index=i)


def run(
    config: SimConfig,
    stream: ProbeSource | None = None,
    *,
    gap_every: int | None = None,
    keep_records: bool = True,
    probe_profile: bool = False,
) -> tuple[LoadVector, RunStats, list[PlacementRecord]]:
    """Place balls ``1..m`` in order.

    ``stream`` defaults to ``ProbeStream(config.seed, 0)``. The gap is
    sampled after every ``gap_every`` balls (default ``n``; 0 disables).
    """
    n, m = config.n, config.m
    if stream is None:
        stream = ProbeStream(config.seed, 0)
    every = n if gap_every is None else gap_every
    choose = chooser_for(config)
    loads = [0] * n
    records: list[PlacementRecord] = []
    hist: dict[int, int] = {}
    series: list[tuple[int, float]] = []
    profile: list[int] | None = [] if probe_profile else None
    total = 0
    top = 0
    for i in range(1, m + 1):
        rec = choose(loads, stream, i)
        b = rec.chosen_bin
        loads[b] += 1
        if loads[b] > top:
            top = loads[b]
        p = rec.probes_used
        total += p
        hist[p] = hist.get(p, 0) + 1
        if keep_records:
            records.append(rec)
        if profile is not None:
            profile.append(p)
        if every and i % every == 0:
            series.append((i, top - i / n))
    stats = RunStats(
        max_load=top,
        gap_series=series,
        total_probes=total,
        probe_histogram=dict(sorted(hist.items())),
        level_fractions=level_fractions(loads),
        probe_profile=profile,
    )
    return loads, stats, records


def theoretical_k(d: int, regime: Regime | str) -> int:
    """Probe cap from the analysis: 2^(2d/3) when m = n, 2^(d/2.17) when heavy."""
    regime = Regime(regime)
    if regime is Regime.LIGHT:
        if d < 4:
            raise ValueError(f"light regime needs d >= 4, got {d}")
        k = math.floor(2 ** (2 * d / 3))
    else:
        if d < 6:
            raise ValueError(f"heavy regime needs d >= 6, got {d}")
        k = math.floor(2 ** (d / 2.17))
    return max(k, 2)
