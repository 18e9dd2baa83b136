"""Balls-into-bins simulation: FirstDiff, Greedy, Left and uniform placement."""

__version__ = "0.1.0"

from .allocators import (  # noqa: E402
    Algorithm,
    Regime,
    SimConfig,
    place_firstdiff,
    place_greedy,
    place_left,
    place_uniform,
    run,
    theoretical_k,
)
from .model import PlacementCase, PlacementRecord, RunStats, fraction_at_least, gap, majorizes  # noqa: E402
from .probes import ProbeStream, next_probe, substream  # noqa: E402

__all__ = [
    "Algorithm",
    "PlacementCase",
    "PlacementRecord",
    "ProbeStream",
    "Regime",
    "RunStats",
    "SimConfig",
    "fraction_at_least",
    "gap",
    "majorizes",
    "next_probe",
    "place_firstdiff",
    "place_greedy",
    "place_left",
    "place_uniform",
    "run",
    "substream",
    "theoretical_k",
]
