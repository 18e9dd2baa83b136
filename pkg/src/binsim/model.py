"""Load vectors, placement records and run statistics."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import accumulate
from typing import Sequence

# Loads are plain Python ints; runs are capped at this many balls.
MAX_BALLS = 2**40

LoadVector = list[int]


class PlacementCase(enum.Enum):
    """How a ball came to be placed.

    ZeroBin: the first probe hit an empty bin.
    AllEqual: every probe saw the same load.
    HighThenLow: one or more probes saw a larger load, then a smaller one.
    LowThenHigh: one or more probes saw a smaller load, then a larger one.
    """

    ZERO_BIN = 1
    ALL_EQUAL = 2
    HIGH_THEN_LOW = 3
    LOW_THEN_HIGH = 4


@dataclass(frozen=True, slots=True)
class PlacementRecord:
    ball_index: int
    chosen_bin: int
    probes_used: int
    case: PlacementCase


@dataclass
class RunStats:
    max_load: int
    gap_series: list[tuple[int, float]] = field(default_factory=list)
    total_probes: int = 0
    probe_histogram: dict[int, int] = field(default_factory=dict)
    level_fractions: list[float] = field(default_factory=list)
    probe_profile: list[int] | None = None

    @property
    def balls(self) -> int:
        return sum(self.probe_histogram.values())

    @property
    def mean_probes(self) -> float:
        balls = self.balls
        return self.total_probes / balls if balls else 0.0


def gap(loads: Sequence[int]) -> Fraction:
    """Maximum load minus average load, exactly."""
    if not loads:
        raise ValueError("load vector must have at least one bin")
    return max(loads) - Fraction(sum(loads), len(loads))


def fraction_at_least(loads: Sequence[int], i: int) -> Fraction:
    if i < 0:
        raise ValueError(f"level must be non-negative, got {i}")
    if not loads:
        raise ValueError("load vector must have at least one bin")
    return Fraction(sum(1 for x in loads if x >= i), len(loads))


def level_fractions(loads: Sequence[int]) -> list[float]:
    """v_0, v_1, ..., v_maxload: fraction of bins with load at least i."""
    n = len(loads)
    top = max(loads)
    counts = [0] * (top + 2)
    for x in loads:
        counts[x] += 1
    # suffix sums give |{j : loads[j] >= i}|
    at_least = list(accumulate(reversed(counts)))[::-1]
    return [at_least[i] / n for i in range(top + 1)]


def majorizes(u: Sequence[int], v: Sequence[int]) -> bool:
    """True iff sorted-descending prefix sums of u dominate those of v.

    Sums are not required to match.
    """
    if len(u) != len(v):
        raise ValueError(f"length mismatch: {len(u)} != {len(v)}")
    su = accumulate(sorted(u, reverse=True))
    sv = accumulate(sorted(v, reverse=True))
    return all(a >= b for a, b in zip(su, sv))


def classify(first_load: int, chosen_load: int, all_equal: bool) -> PlacementCase:
    """Case for a fixed-probe placement, given the observed probe loads."""
    if first_load == 0:
        return PlacementCase.ZERO_BIN
    if all_equal:
        return PlacementCase.ALL_EQUAL
    if chosen_load < first_load:
        return PlacementCase.HIGH_THEN_LOW
    return PlacementCase.LOW_THEN_HIGH
