"""Seedable, splittable streams of uniform bin probes.

A stream is identified by ``(seed, stream_id)``. The underlying generator is
NumPy's PCG64 keyed through a ``SeedSequence`` with ``stream_id`` as the spawn
key, so distinct ids give statistically independent streams and the sequence
does not depend on which process or thread consumes it.

Probes are drawn with replacement. Bounded integers come from
``Generator.integers``, which uses rejection (Lemire) and is unbiased.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

BLOCK = 4096
_U64 = 2**64


class ProbeStream:
    """Independent uniform draws on ``[0, n)``.

    Draws are generated in fixed-size blocks per ``n``; asking for a
    different ``n`` discards the current block. The probe sequence is
    therefore a deterministic function of ``(seed, stream_id)`` and the
    sequence of ``n`` values requested.
    """

    __slots__ = ("seed", "stream_id", "_gen", "_n", "_buf", "_pos")

    def __init__(self, seed: int, stream_id: int = 0) -> None:
        if not (0 <= seed < _U64 and 0 <= stream_id < _U64):
            raise ValueError("seed and stream_id must be unsigned 64-bit integers")
        self.seed = seed
        self.stream_id = stream_id
        ss = np.random.SeedSequence(seed, spawn_key=(stream_id,))
        self._gen = np.random.Generator(np.random.PCG64(ss))
        self._n = 0
        self._buf: list[int] = []
        self._pos = 0

    def __repr__(self) -> str:
        return f"ProbeStream(seed={self.seed}, stream_id={self.stream_id})"

    def _refill(self, n: int) -> None:
        self._buf = self._gen.integers(0, n, size=BLOCK).tolist()
        self._n = n
        self._pos = 0

    def next_probe(self, n: int) -> int:
        if n < 1:
            raise ValueError(f"bin count must be positive, got {n}")
        if n != self._n or self._pos == len(self._buf):
            self._refill(n)
        x = self._buf[self._pos]
        self._pos += 1
        return x

    def take(self, count: int, n: int) -> list[int]:
        return [self.next_probe(n) for _ in range(count)]


def substream(seed: int, trial_index: int) -> ProbeStream:
    return ProbeStream(seed, trial_index)


def next_probe(stream: ProbeStream, n: int) -> int:
    return stream.next_probe(n)


class ScriptedProbes:
    """Replays a fixed probe sequence; used for coupling and unit tests.

    Raises ``LookupError`` when asked for more probes than scripted.
    """

    __slots__ = ("_probes", "_pos")

    def __init__(self, probes: Iterable[int]) -> None:
        self._probes = list(probes)
        self._pos = 0

    @property
    def consumed(self) -> int:
        return self._pos

    def next_probe(self, n: int) -> int:
        if self._pos >= len(self._probes):
            raise LookupError(f"scripted probes exhausted after {self._pos}")
        x = self._probes[self._pos]
        if not 0 <= x < n:
            raise ValueError(f"scripted probe {x} outside [0, {n})")
        self._pos += 1
        return x
