"""Rank-coupled runs for checking majorization step by step.

Both processes keep their loads sorted in non-increasing order, and a probe
is a rank in that order. Per ball, ``k`` ranks are drawn once; each process
reads the prefix it needs. A chosen bin's ball is added at the leftmost
position of its tie block, which keeps the vector sorted and yields the
same multiset as adding it anywhere in the block.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import accumulate
from typing import Callable, Sequence

from scipy import stats

from .allocators import (
    Algorithm,
    SimConfig,
    choose_firstdiff,
    choose_greedy,
    choose_uniform,
    run,
)
from .model import PlacementRecord
from .probes import ProbeStream, ScriptedProbes, substream

Chooser = Callable[[Sequence[int], ScriptedProbes], PlacementRecord]


@dataclass(frozen=True)
class CoupledTrace:
    """State after ``step`` balls. ``vector_a`` should be majorized by ``vector_b``."""

    step: int
    vector_a: tuple[int, ...]
    vector_b: tuple[int, ...]
    majorized: bool


def _bump(sorted_loads: list[int], idx: int) -> None:
    v = sorted_loads[idx]
    while idx > 0 and sorted_loads[idx - 1] == v:
        idx -= 1
    sorted_loads[idx] = v + 1


def _sorted_majorizes(big: Sequence[int], small: Sequence[int]) -> bool:
    return all(x >= y for x, y in zip(accumulate(big), accumulate(small)))


def _couple(
    choose_a: Chooser,
    choose_b: Chooser,
    n: int,
    m: int,
    k: int,
    stream: ProbeStream,
    keep_vectors: bool,
) -> list[CoupledTrace]:
    a = [0] * n
    b = [0] * n
    out: list[CoupledTrace] = []
    for step in range(1, m + 1):
        ranks = stream.take(k, n)
        ra = choose_a(a, ScriptedProbes(ranks))
        rb = choose_b(b, ScriptedProbes(ranks))
        _bump(a, ra.chosen_bin)
        _bump(b, rb.chosen_bin)
        ok = _sorted_majorizes(b, a)
        out.append(
            CoupledTrace(
                step,
                tuple(a) if keep_vectors else (),
                tuple(b) if keep_vectors else (),
                ok,
            )
        )
    return out


def couple_firstdiff_greedy2(
    n: int,
    m: int,
    d: int,
    k: int,
    seed: int,
    *,
    stream_id: int = 0,
    keep_vectors: bool = True,
) -> list[CoupledTrace]:
    """FirstDiff[d] (capped at k) against Greedy[2] on its first two ranks.

    ``vector_a`` is FirstDiff, ``vector_b`` is Greedy[2].
    """
    if d < 2 or k < 2:
        raise ValueError(f"need d >= 2 and k >= 2, got d={d}, k={k}")
    return _couple(
        lambda loads, s: choose_firstdiff(loads, s, k, ball_index=0),
        lambda loads, s: choose_greedy(loads, s, 2, ball_index=0),
        n,
        m,
        k,
        substream(seed, stream_id),
        keep_vectors,
    )


def couple_alg_greedyk(
    alg: Algorithm | str,
    n: int,
    m: int,
    k: int,
    seed: int,
    *,
    param: int | None = None,
    stream_id: int = 0,
    keep_vectors: bool = True,
) -> list[CoupledTrace]:
    """An algorithm using at most ``k`` uniform probes against Greedy[k].

    Greedy[k] reads all ``k`` ranks, so its first ``w`` probes are the
    ones the algorithm used. ``param`` is ``d`` for Greedy or the probe
    cap for FirstDiff (default ``k``). ``vector_a`` is Greedy[k],
    ``vector_b`` the algorithm.
    """
    alg = Algorithm(alg)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if alg is Algorithm.LEFT:
        raise ValueError("Left probes per group, not uniformly over all bins")
    if alg is Algorithm.UNIFORM:
        choose = lambda loads, s: choose_uniform(loads, s, ball_index=0)
    elif alg is Algorithm.GREEDY:
        d = k if param is None else param
        if d > k:
            raise ValueError(f"Greedy[{d}] exceeds the cap k={k}")
        choose = lambda loads, s: choose_greedy(loads, s, d, ball_index=0)
    else:
        cap = k if param is None else param
        if cap > k:
            raise ValueError(f"FirstDiff cap {cap} exceeds k={k}")
        choose = lambda loads, s: choose_firstdiff(loads, s, cap, ball_index=0)
    return _couple(
        lambda loads, s: choose_greedy(loads, s, k, ball_index=0),
        choose,
        n,
        m,
        k,
        substream(seed, stream_id),
        keep_vectors,
    )


def all_majorized(trace: Sequence[CoupledTrace]) -> bool:
    return all(t.majorized for t in trace)


@dataclass(frozen=True)
class DominanceResult:
    early: list[float]
    late: list[float]
    statistic: float
    pvalue: float
    alpha: float

    @property
    def rejected(self) -> bool:
        return self.pvalue < self.alpha


def gap_time_dominance(
    config: SimConfig,
    t_early: int,
    t_late: int,
    seeds: int,
    *,
    alpha: float = 0.01,
) -> DominanceResult:
    """One-sided KS test of "gap after t_early*n balls is dominated by gap after t_late*n".

    Each seed is one run (stream ``trial_index = seed index``) sampled at both
    times. The null is that the early gap's CDF lies on or above the late one.
    """
    if not 0 < t_early <= t_late:
        raise ValueError("need 0 < t_early <= t_late")
    n = config.n
    cfg = SimConfig(
        n=n, m=t_late * n, algorithm=config.algorithm, d=config.d, k=config.k, seed=config.seed
    )
    early, late = [], []
    for i in range(seeds):
        _, st, _ = run(cfg, substream(config.seed, i), keep_records=False)
        gaps = dict(st.gap_series)
        early.append(gaps[t_early * n])
        late.append(gaps[t_late * n])
    res = stats.ks_2samp(early, late, alternative="less")
    return DominanceResult(early, late, float(res.statistic), float(res.pvalue), alpha)
