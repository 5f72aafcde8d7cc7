"""Superposed rate-one Poisson clocks on the edges of a lattice.

One exponential clock of rate ``n_edges`` drives the whole lattice; each ring
is assigned to an edge chosen uniformly at random. This is equal in law to
independent rate-one clocks on every edge.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


def replica_rng(base_seed: int, replica: int = 0) -> np.random.Generator:
    """Independent, reproducible generator for replica ``replica``."""
    return np.random.default_rng([int(base_seed), int(replica)])


@dataclass(frozen=True)
class Event:
    time: float
    edge: int


class EventStream:
    """Stream of ``(time, edge)`` events with strictly increasing times.

    Events are drawn in blocks of ``block`` for speed; the realised sequence
    does not depend on how the caller slices it.
    """

    def __init__(self, n_edges: int, rng=None, start_time: float = 0.0, block: int = 1 << 16):
        if n_edges < 1:
            raise ValueError("n_edges must be positive")
        self.n_edges = int(n_edges)
        self.total_rate = float(n_edges)
        self.rng = np.random.default_rng(rng)
        self.current_time = float(start_time)
        self._last_drawn = float(start_time)
        self._block = int(block)
        self._times = np.empty(0)
        self._edges = np.empty(0, dtype=np.int64)
        self._pos = 0

    def _refill(self):
        waits = self.rng.standard_exponential(self._block)
        # a zero wait would tie two events; redraw (probability ~1e-16 per draw)
        while True:
            zero = waits <= 0.0
            if not zero.any():
                break
            waits[zero] = self.rng.standard_exponential(int(zero.sum()))
        waits /= self.total_rate
        times = self._last_drawn + np.cumsum(waits)
        self._last_drawn = float(times[-1])
        edges = self.rng.integers(0, self.n_edges, size=self._block)
        self._times = np.concatenate([self._times[self._pos:], times])
        self._edges = np.concatenate([self._edges[self._pos:], edges])
        self._pos = 0

    def next_event(self) -> Event:
        if self._pos >= self._times.size:
            self._refill()
        t, e = self._times[self._pos], self._edges[self._pos]
        self._pos += 1
        self.current_time = float(t)
        return Event(float(t), int(e))

    def take(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Next ``n`` events as arrays ``(times, edges)``."""
        while self._times.size - self._pos < n:
            self._refill()
        sl = slice(self._pos, self._pos + n)
        times, edges = self._times[sl].copy(), self._edges[sl].copy()
        self._pos += n
        if n:
            self.current_time = float(times[-1])
        return times, edges

    def take_until(self, t_end: float, max_events: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """All pending events with time strictly below ``t_end``.

        With ``max_events`` set, at most that many are returned and the rest
        stay queued.
        """
        chunks_t, chunks_e = [], []
        taken = 0
        while True:
            if self._pos >= self._times.size:
                self._refill()
            times = self._times[self._pos:]
            k = int(np.searchsorted(times, t_end, side="left"))
            if max_events is not None:
                k = min(k, max_events - taken)
            chunks_t.append(times[:k].copy())
            chunks_e.append(self._edges[self._pos:self._pos + k].copy())
            self._pos += k
            taken += k
            if self._pos < self._times.size or (max_events is not None and taken >= max_events):
                break
        times = np.concatenate(chunks_t)
        if times.size:
            self.current_time = float(times[-1])
        return times, np.concatenate(chunks_e)


def next_event(stream: EventStream) -> Event:
    return stream.next_event()


def count_interactions(trace, edge: int, window: tuple[float, float]) -> int:
    """Number of events on ``edge`` with time in ``[window[0], window[1])``.

    ``trace`` is either an iterable of :class:`Event` or a ``(times, edges)``
    pair of arrays.
    """
    lo, hi = window
    if isinstance(trace, tuple) and len(trace) == 2 and not isinstance(trace[0], Event):
        times, edges = (np.asarray(a) for a in trace)
        if times.size == 0:
            return 0
        return int(np.count_nonzero((edges == edge) & (times >= lo) & (times < hi)))
    return sum(1 for ev in trace if ev.edge == edge and lo <= ev.time < hi)


def write_trace_csv(path, times, edges):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "edge"])
        for t, e in zip(np.asarray(times), np.asarray(edges)):
            w.writerow([repr(float(t)), int(e)])


def read_trace_csv(path) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.size == 0:
        return np.empty(0), np.empty(0, dtype=np.int64)
    return data[:, 0], data[:, 1].astype(np.int64)
