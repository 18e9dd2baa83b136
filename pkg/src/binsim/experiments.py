"""Experiment grids, trial aggregation and result files."""

from __future__ import annotations

import csv
import io
import json
import math
import platform
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import jsonschema
import numpy as np

from . import __version__
from .allocators import Algorithm, SimConfig, run
from .bounds import overcount_audit
from .probes import substream

CSV_COLUMNS = ["algo", "n", "m", "d", "k", "trials", "seed", "max_load", "pct", "avg_probes"]


@dataclass(frozen=True)
class TrialResult:
    max_load: int
    total_probes: int
    balls: int
    final_gap: float
    probe_histogram: dict[int, int]


@dataclass
class TrialSummary:
    config: SimConfig
    trials: int
    max_load_histogram: dict[int, float]
    avg_probes_per_ball: float
    wall_time: float = 0.0
    max_load_counts: dict[int, int] = field(default_factory=dict)
    probe_histogram: dict[int, int] = field(default_factory=dict)
    trial_mean_probes: list[float] = field(default_factory=list)
    final_gaps: list[float] = field(default_factory=list)
    n_requested: int | None = None

    @property
    def modal_max_load(self) -> int:
        # ties resolved toward the smaller load
        return min(self.max_load_counts, key=lambda x: (-self.max_load_counts[x], x))


@dataclass(frozen=True)
class GridCell:
    """One grid entry as written; Left's ``n`` may not be a multiple of ``d`` yet."""

    algo: Algorithm
    n: int
    m: int
    d: int
    k: int = 2

    def to_config(self, seed: int = 0) -> tuple[SimConfig, int | None]:
        """Validated config plus the requested n when Left had to round it down."""
        n, m, requested = self.n, self.m, None
        if self.algo is Algorithm.LEFT and self.d >= 1 and n % self.d:
            requested = n
            n -= n % self.d
            if m == self.n:
                m = n
        return SimConfig(n=n, m=m, algorithm=self.algo, d=self.d, k=self.k, seed=seed), requested


@dataclass(frozen=True)
class ExperimentGrid:
    cells: list[GridCell]
    trials: int = 100
    seed: int = 0
    out: Path | None = None
    format: str = "csv"

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.format not in ("csv", "json"):
            raise ValueError(f"unknown format {self.format!r}")
        for i, cell in enumerate(self.cells, start=1):
            try:
                cell.to_config(self.seed)
            except ValueError as exc:
                raise ValueError(f"grid cell {i} ({cell}): {exc}") from None


def _one_trial(args: tuple[SimConfig, int]) -> TrialResult:
    config, index = args
    _, st, _ = run(config, substream(config.seed, index), gap_every=0, keep_records=False)
    m = config.m
    return TrialResult(
        st.max_load, st.total_probes, m, st.max_load - m / config.n, st.probe_histogram
    )


def run_trials(config: SimConfig, trials: int, workers: int = 1) -> list[TrialResult]:
    """Trial ``i`` uses ``substream(config.seed, i)``; order never depends on workers."""
    jobs = [(config, i) for i in range(trials)]
    if workers <= 1:
        return [_one_trial(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_one_trial, jobs, chunksize=max(1, trials // (4 * workers))))


def _percentages(counts: dict[int, int], trials: int) -> dict[int, float]:
    """One-decimal percentages that add up to exactly 100 (largest remainder)."""
    if not trials:
        return {}
    tenths = {x: 1000 * c / trials for x, c in counts.items()}
    floors = {x: math.floor(v) for x, v in tenths.items()}
    short = 1000 - sum(floors.values())
    for x in sorted(tenths, key=lambda x: (floors[x] - tenths[x], x))[:short]:
        floors[x] += 1
    return {x: floors[x] / 10 for x in sorted(floors)}


def summarize(
    config: SimConfig, results: Sequence[TrialResult], wall_time: float = 0.0
) -> TrialSummary:
    counts = Counter(r.max_load for r in results)
    trials = len(results)
    probes: Counter[int] = Counter()
    for r in results:
        probes.update(r.probe_histogram)
    balls = sum(r.balls for r in results)
    return TrialSummary(
        config=config,
        trials=trials,
        max_load_histogram=_percentages(counts, trials),
        avg_probes_per_ball=sum(r.total_probes for r in results) / balls if balls else 0.0,
        wall_time=wall_time,
        max_load_counts=dict(sorted(counts.items())),
        probe_histogram=dict(sorted(probes.items())),
        trial_mean_probes=[r.total_probes / r.balls if r.balls else 0.0 for r in results],
        final_gaps=[r.final_gap for r in results],
    )


def run_cell(
    config: SimConfig, trials: int, workers: int = 1, *, n_requested: int | None = None
) -> TrialSummary:
    start = time.perf_counter()
    results = run_trials(config, trials, workers)
    summary = summarize(config, results, time.perf_counter() - start)
    summary.n_requested = n_requested
    return summary


def run_grid(grid: ExperimentGrid, workers: int = 1) -> list[TrialSummary]:
    out = []
    for cell in grid.cells:
        config, requested = cell.to_config(grid.seed)
        out.append(run_cell(config, grid.trials, workers, n_requested=requested))
    return out


def run_table1(grid: ExperimentGrid, workers: int = 1) -> list[TrialSummary]:
    for cell in grid.cells:
        if cell.m != cell.n:
            raise ValueError(f"table1 cells need m = n, got n={cell.n}, m={cell.m}")
    return run_grid(grid, workers)


# Max-load table layout for m = n: (d, k) pairs, each run for Greedy, Left and FirstDiff.
TABLE1_DK = [(2, 3), (3, 10), (4, 30)]
TABLE1_SIZES = [2**8, 2**12, 2**16]
TABLE1_SLOW_SIZES = [2**20, 2**24]


def table1_cells(sizes: Iterable[int] = TABLE1_SIZES) -> list[GridCell]:
    return [
        GridCell(algo, n, n, d, k)
        for n in sizes
        for d, k in TABLE1_DK
        for algo in (Algorithm.GREEDY, Algorithm.LEFT, Algorithm.FIRSTDIFF)
    ]


def parse_grid(text: str) -> list[GridCell]:
    """Parse a grid: a JSON array of objects, or one ``key=value`` cell per line.

    Line format::

        # comment
        algo=firstdiff n=4096 d=3 k=10
        algo=left n=4096 d=3

    ``m`` defaults to ``n``; ``k`` only matters for firstdiff.
    """
    if text.lstrip().startswith("["):
        rows = json.loads(text)
    else:
        rows = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                rows.append(dict(tok.split("=", 1) for tok in line.split()))
            except ValueError:
                raise ValueError(f"grid line {lineno}: expected key=value tokens: {line!r}") from None
    cells = []
    for i, row in enumerate(rows, start=1):
        try:
            algo = Algorithm(str(row["algo"]).lower())
            n = int(row["n"])
            cells.append(
                GridCell(
                    algo=algo,
                    n=n,
                    m=int(row.get("m", n)),
                    d=int(row.get("d", 1 if algo is Algorithm.UNIFORM else 2)),
                    k=int(row.get("k", 3 if algo is Algorithm.FIRSTDIFF else 2)),
                )
            )
        except (KeyError, ValueError) as exc:
            raise ValueError(f"grid cell {i}: {exc}") from None
    return cells


def load_grid(path: str | Path) -> list[GridCell]:
    return parse_grid(Path(path).read_text())


@dataclass
class ProbeBudgetReport:
    config: SimConfig
    trials: int
    mean: float
    max_probes: int
    histogram: dict[int, int]
    trial_means: list[float]

    @property
    def violation(self) -> bool:
        return self.mean > self.config.d

    @property
    def worst_trial_mean(self) -> float:
        return max(self.trial_means)

    def as_dict(self) -> dict:
        return {
            "config": config_dict(self.config),
            "trials": self.trials,
            "mean": self.mean,
            "max": self.max_probes,
            "worst_trial_mean": self.worst_trial_mean,
            "histogram": {str(k): v for k, v in self.histogram.items()},
            "violation": self.violation,
        }


def probe_budget_report(config: SimConfig, trials: int, workers: int = 1) -> ProbeBudgetReport:
    if config.algorithm is not Algorithm.FIRSTDIFF:
        raise ValueError("probe budget report is for FirstDiff")
    s = summarize(config, run_trials(config, trials, workers))
    return ProbeBudgetReport(
        config=config,
        trials=trials,
        mean=s.avg_probes_per_ball,
        max_probes=max(s.probe_histogram) if s.probe_histogram else 0,
        histogram=s.probe_histogram,
        trial_means=s.trial_mean_probes,
    )


def heavy_threshold(n: int, m: int, d: int, c: float) -> float:
    """m/n + log log n / (0.46 d) + c log log log n (base-2 logs)."""
    ll = math.log2(math.log2(n))
    return m / n + ll / (0.46 * d) + c * math.log2(ll)


@dataclass
class HeavyGapReport:
    config: SimConfig
    trials: int
    gaps: list[float]
    max_loads: list[int]
    threshold: float
    c: float

    @property
    def exceed(self) -> int:
        return sum(1 for x in self.max_loads if x > self.threshold)

    def as_dict(self) -> dict:
        return {
            "config": config_dict(self.config),
            "trials": self.trials,
            "gap_histogram": {str(g): c for g, c in sorted(Counter(self.gaps).items())},
            "max_gap": max(self.gaps),
            "mean_gap": sum(self.gaps) / len(self.gaps),
            "threshold": self.threshold,
            "c": self.c,
            "exceed": self.exceed,
        }


def heavy_gap_report(
    n: int,
    m: int,
    d: int,
    k: int,
    trials: int,
    *,
    c: float = 1.0,
    seed: int = 0,
    workers: int = 1,
) -> HeavyGapReport:
    if m < n:
        raise ValueError(f"need m >= n, got n={n}, m={m}")
    config = SimConfig(n=n, m=m, algorithm=Algorithm.FIRSTDIFF, d=d, k=k, seed=seed)
    results = run_trials(config, trials, workers)
    return HeavyGapReport(
        config=config,
        trials=trials,
        gaps=[r.final_gap for r in results],
        max_loads=[r.max_load for r in results],
        threshold=heavy_threshold(n, m, d, c),
        c=c,
    )


def estimate_lambda(
    ns: Sequence[int], rounds: int, trials: int, *, d: int = 6, k: int = 6, seed: int = 0
) -> float:
    """Largest observed gap / log2 n over FirstDiff runs with m = rounds * n."""
    worst = 0.0
    for n in ns:
        cfg = SimConfig(n=n, m=rounds * n, algorithm=Algorithm.FIRSTDIFF, d=d, k=k, seed=seed)
        for r in run_trials(cfg, trials):
            worst = max(worst, r.final_gap / math.log2(n))
    return worst


def config_dict(config: SimConfig) -> dict:
    return {
        "algo": config.algorithm.value,
        "n": config.n,
        "m": config.m,
        "d": config.d,
        "k": config.k if config.algorithm is Algorithm.FIRSTDIFF else None,
        "seed": config.seed,
    }


def csv_text(summaries: Sequence[TrialSummary]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for s in summaries:
        c = config_dict(s.config)
        k = "" if c["k"] is None else c["k"]
        for load, pct in s.max_load_histogram.items():
            w.writerow(
                [c["algo"], c["n"], c["m"], c["d"], k, s.trials, c["seed"], load,
                 f"{pct:.1f}", f"{s.avg_probes_per_ball:.6f}"]
            )
    return buf.getvalue()


def _metadata(summaries: Sequence[TrialSummary]) -> dict:
    return {
        "binsim": __version__,
        "numpy": np.__version__,
        "python": platform.python_version(),
        "seeds": sorted({s.config.seed for s in summaries}),
        "stream_id": "trial index",
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def json_doc(summaries: Sequence[TrialSummary], *, timing: bool = False) -> dict:
    cells = []
    for s in summaries:
        cell = {
            "config": config_dict(s.config),
            "trials": s.trials,
            "max_load_histogram": {str(k): v for k, v in s.max_load_histogram.items()},
            "max_load_counts": {str(k): v for k, v in s.max_load_counts.items()},
            "avg_probes_per_ball": s.avg_probes_per_ball,
            "probe_histogram": {str(k): v for k, v in s.probe_histogram.items()},
            "n_requested": s.n_requested,
        }
        if timing:
            cell["wall_time"] = s.wall_time
        cells.append(cell)
    return {"metadata": _metadata(summaries), "cells": cells}


RESULTS_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["metadata", "cells"],
    "properties": {
        "metadata": {
            "type": "object",
            "required": ["binsim", "numpy", "seeds", "stream_id", "timestamp"],
            "properties": {
                "seeds": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                "timestamp": {"type": "string"},
            },
        },
        "cells": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["config", "trials", "max_load_histogram", "avg_probes_per_ball"],
                "properties": {
                    "config": {
                        "type": "object",
                        "required": ["algo", "n", "m", "d", "k", "seed"],
                        "properties": {
                            "algo": {"enum": [a.value for a in Algorithm]},
                            "n": {"type": "integer", "minimum": 1},
                            "m": {"type": "integer", "minimum": 0},
                            "d": {"type": "integer", "minimum": 1},
                            "k": {"type": ["integer", "null"], "minimum": 2},
                            "seed": {"type": "integer", "minimum": 0},
                        },
                    },
                    "trials": {"type": "integer", "minimum": 1},
                    "max_load_histogram": {
                        "type": "object",
                        "patternProperties": {"^[0-9]+$": {"type": "number", "minimum": 0, "maximum": 100}},
                        "additionalProperties": False,
                    },
                    "max_load_counts": {
                        "type": "object",
                        "patternProperties": {"^[0-9]+$": {"type": "integer", "minimum": 0}},
                        "additionalProperties": False,
                    },
                    "avg_probes_per_ball": {"type": "number", "minimum": 0},
                    "probe_histogram": {"type": "object"},
                    "n_requested": {"type": ["integer", "null"]},
                    "wall_time": {"type": "number", "minimum": 0},
                },
            },
        },
    },
}


def validate_results(doc: dict) -> None:
    jsonschema.validate(doc, RESULTS_SCHEMA)


def emit_results(
    summaries: Sequence[TrialSummary], path: str | Path, format: str = "csv", *, timing: bool = False
) -> None:
    path = Path(path)
    if format == "csv":
        text = csv_text(summaries)
    elif format == "json":
        text = json.dumps(json_doc(summaries, timing=timing), indent=2, sort_keys=True) + "\n"
    else:
        raise ValueError(f"unknown format {format!r}")
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc.strerror}") from exc


def audit_runs(n: int, m: int, k: int, seeds: int, *, seed: int = 0) -> list[dict]:
    """overcount_audit over ``seeds`` FirstDiff runs (trial i on substream i)."""
    cfg = SimConfig(n=n, m=m, algorithm=Algorithm.FIRSTDIFF, d=2, k=k, seed=seed)
    out = []
    for i in range(seeds):
        _, _, recs = run(cfg, substream(seed, i), gap_every=0)
        out.append(overcount_audit(recs, n, k).as_dict())
    return out


def probe_profile(config: SimConfig, trials: int) -> list[float]:
    """Mean probes used by ball ``i`` (index ``i - 1``) across trials."""
    sums = [0] * config.m
    for t in range(trials):
        _, st, _ = run(config, substream(config.seed, t), gap_every=0, keep_records=False,
                       probe_profile=True)
        for i, p in enumerate(st.probe_profile or ()):
            sums[i] += p
    return [s / trials for s in sums]


def profile_csv_text(profile: Sequence[float], n: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["ball_index", "residue", "mean_probes"])
    for i, p in enumerate(profile, start=1):
        w.writerow([i, i % n, f"{p:.6f}"])
    return buf.getvalue()
