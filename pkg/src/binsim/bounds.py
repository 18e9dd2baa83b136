"""Executable forms of the probe-count and max-load bounds.

Logarithms are base 2 throughout, except the Janson tail, which uses the
natural log as stated.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .model import PlacementRecord

EMPIRICAL_LABEL = "constants: empirical defaults"


@dataclass(frozen=True, order=True)
class CanonicalConfig:
    """``b`` balls at level ``level``, full levels below, nothing above."""

    level: int
    count: int


@dataclass(frozen=True)
class BoundParams:
    lam: float = 4.0
    a: float = 0.5
    b_const: float = 4.0
    gamma: int = 15

    def __post_init__(self) -> None:
        for name in ("lam", "a", "b_const", "gamma"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @property
    def is_default(self) -> bool:
        return self == BoundParams()


def plateaus(loads: Sequence[int]) -> list[tuple[int, int]]:
    """Highest complete level plus every non-empty level above it.

    Returns ``(level, balls_at_level)`` pairs in increasing level order.
    Level 0 counts as complete ground and is not reported unless every
    bin is empty, in which case ``[(0, n)]`` is returned as a sentinel.
    """
    n = len(loads)
    if n == 0:
        raise ValueError("load vector must have at least one bin")
    low, top = min(loads), max(loads)
    if top == 0:
        return [(0, n)]
    hist = Counter(loads)
    out = []
    at_least = n
    for level in range(low, top + 1):
        if level > low:
            at_least -= hist.get(level - 1, 0)
        if level >= 1:
            out.append((level, at_least))
    return out


def _apply_update(
    selected: set[CanonicalConfig], n: int, level: int, b_here: int, b_next: int
) -> CanonicalConfig:
    up = level + 1
    if b_next == 0:
        new = CanonicalConfig(up, 1)
    elif b_next != n - 1:
        selected.discard(CanonicalConfig(up, b_next))
        new = CanonicalConfig(up, b_next + 1)
    else:
        selected.discard(CanonicalConfig(level, b_here))
        selected.discard(CanonicalConfig(up, n - 1))
        new = CanonicalConfig(up, n)
    selected.add(new)
    return new


def canonical_update(
    selected: set[CanonicalConfig], loads_before: Sequence[int], placement_level: int
) -> CanonicalConfig:
    """Update the canonical set for a ball dropped on a bin of load ``placement_level``.

    Mutates ``selected`` and returns the newly added (selected) configuration.
    """
    n = len(loads_before)
    if placement_level not in loads_before:
        raise ValueError(f"no bin has load {placement_level}; not a plateau level")
    b_here = n if placement_level == 0 else sum(1 for x in loads_before if x >= placement_level)
    b_next = sum(1 for x in loads_before if x > placement_level)
    return _apply_update(selected, n, placement_level, b_here, b_next)


class CanonicalTracker:
    """Incremental version of :func:`canonical_update` for replaying a run."""

    def __init__(self, n: int) -> None:
        self.n = n
        self.selected: set[CanonicalConfig] = set()
        # at_least[l] = number of bins with load >= l, for l >= 1
        self._at_least = [n, 0]

    def place(self, level: int) -> CanonicalConfig:
        at = self._at_least
        if level + 2 > len(at):
            at.append(0)
        b_here = self.n if level == 0 else at[level]
        new = _apply_update(self.selected, self.n, level, b_here, at[level + 1])
        at[level + 1] += 1
        return new


def expected_probes_canonical(b: int, n: int, k: int) -> float:
    """Probe charge for a ball placed into configuration C(l, b).

    The first ``n // k`` and last ``n // k - 1`` values of ``b`` are charged
    the full ``k``; the rest get ``min(b/(n-b) + (n-b)/b, k)``.
    """
    if not 0 <= b <= n - 1:
        raise ValueError(f"b must be in [0, n-1], got b={b}, n={n}")
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    cut = n // k
    if b == 0 or b <= cut - 1 or b >= n - cut + 1:
        return float(k)
    return min(b / (n - b) + (n - b) / b, float(k))


def simulate_canonical_probes(
    b: int, n: int, k: int, samples: int = 10**6, seed: int = 0
) -> float:
    """Monte Carlo mean of the probe count charged on C(l, b).

    ``b`` bins sit one level above the other ``n - b``. After the first
    probe, probing continues until a bin of the other height turns up;
    each sample's count of those extra probes is truncated at ``k``.
    """
    if not 0 < b < n:
        raise ValueError(f"b must be in (0, n), got b={b}, n={n}")
    rng = np.random.Generator(np.random.PCG64(seed))
    first_high = rng.random(samples) < b / n
    p_other = np.where(first_high, (n - b) / n, b / n)
    extra = rng.geometric(p_other)
    return float(np.minimum(extra, k).mean())


@dataclass(frozen=True)
class BetaSequence:
    values: list[float]
    floor: float
    i_star: float
    start: int = 11

    @property
    def floor_index(self) -> int:
        """Index (in the 11-based numbering) of the last entry."""
        return self.start + len(self.values) - 1


def beta_sequence(n: int, k: int) -> BetaSequence:
    """Layered-induction bounds for m = n.

    Starts at 1/11 and iterates ``max((10/3) * beta^k, 18 log n / n)``,
    stopping at the first entry that sits on the floor. When the floor is
    already above 1/11 (n <= 2^11) only the starting value is returned.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    floor = 18 * math.log2(n) / n
    i_star = math.log2(math.log2(n)) / math.log2(k) + 11 if n > 2 else 11.0
    beta = 1 / 11
    values = [beta]
    while beta > floor:
        beta = max(10 / 3 * beta**k, floor)
        values.append(beta)
    return BetaSequence(values, floor, i_star)


def janson_tail(p_min: float, mu: float, lam: float) -> float:
    """Upper bound on P(X >= lam * mu) for a sum of geometric variables."""
    if not 0 < p_min <= 1:
        raise ValueError(f"p_min must be in (0, 1], got {p_min}")
    if mu <= 0:
        raise ValueError(f"mu must be positive, got {mu}")
    if lam < 1:
        raise ValueError(f"Lambda must be >= 1, got {lam}")
    return math.exp(-p_min * mu * (lam - 1 - math.log(lam)))


@dataclass(frozen=True)
class HeavyProbeBound:
    total: float
    per_ball: float
    intermediate: float
    regime_min_m: float
    in_regime: bool
    label: str = ""


def heavy_probe_bound(m: int, n: int, k: int, params: BoundParams | None = None) -> HeavyProbeBound:
    """High-probability total-probe bound ``2.17 m log k`` for m >> n.

    ``in_regime`` is False when ``m < 72 (n lam log n + n)``; the numbers
    are still reported.
    """
    params = params or BoundParams()
    if n < 2 or k < 2 or m < 1:
        raise ValueError("need n >= 2, k >= 2, m >= 1")
    logn, logk = math.log2(n), math.log2(k)
    slack = n * params.lam * logn + n
    need = 72 * slack
    return HeavyProbeBound(
        total=2.17 * m * logk,
        per_ball=2.17 * logk,
        intermediate=2.14 * (m + slack) * logk,
        regime_min_m=need,
        in_regime=m >= need,
        label=EMPIRICAL_LABEL if params.is_default else "",
    )


@dataclass
class AuditReport:
    balls: int
    duplicates: list[CanonicalConfig] = field(default_factory=list)
    selected: list[CanonicalConfig] = field(default_factory=list)
    overcount_probes: float = 0.0
    actual_probes: int = 0

    @property
    def unique(self) -> bool:
        return not self.duplicates

    @property
    def overcount_holds(self) -> bool:
        return self.overcount_probes >= self.actual_probes

    def as_dict(self) -> dict:
        return {
            "balls": self.balls,
            "duplicates": [(c.level, c.count) for c in self.duplicates],
            "selected_configs": len(self.selected),
            "overcount_probes": self.overcount_probes,
            "actual_probes": self.actual_probes,
            "overcount_holds": self.overcount_holds,
        }


def overcount_audit(trace: Iterable[PlacementRecord], n: int, k: int) -> AuditReport:
    """Replay a FirstDiff trace through the canonical-configuration bookkeeping.

    Each ball is charged ``expected_probes_canonical(b, n, k)`` for the
    configuration C(l, b) it was placed into (the selected one minus that
    ball); the total is compared with the probes actually used.
    """
    loads = [0] * n
    tracker = CanonicalTracker(n)
    seen: set[CanonicalConfig] = set()
    report = AuditReport(balls=0)
    for expected_index, rec in enumerate(trace, start=1):
        if rec.ball_index != expected_index:
            raise ValueError(f"trace out of order at ball {expected_index}")
        if not 0 <= rec.chosen_bin < n:
            raise ValueError(f"ball {rec.ball_index}: bin {rec.chosen_bin} out of range")
        if not 1 <= rec.probes_used <= k:
            raise ValueError(f"ball {rec.ball_index}: {rec.probes_used} probes exceeds cap {k}")
        sel = tracker.place(loads[rec.chosen_bin])
        loads[rec.chosen_bin] += 1
        if sel in seen:
            report.duplicates.append(sel)
        seen.add(sel)
        report.selected.append(sel)
        report.overcount_probes += expected_probes_canonical(sel.count - 1, n, k)
        report.actual_probes += rec.probes_used
        report.balls += 1
    return report
