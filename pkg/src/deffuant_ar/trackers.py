"""Coalescing trackers that follow the largest local gap.

A tracker sits on an edge. Whenever an interaction happens on its edge or on
one of the two adjacent edges, it jumps to whichever of the three edges now
carries the largest gap. Trackers landing on the same edge merge for good.

Classes are identified by the index of their smallest origin, so class ids
are stable under merging and deterministic.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import OpinionLattice


@dataclass
class TrackerState:
    origins: np.ndarray  # origin edge of tracker k
    position: np.ndarray  # current edge of class k, -1 once merged away
    parent: np.ndarray  # class k merged into parent[k]; parent[k] == k for live classes
    occupant: np.ndarray  # per edge: live class sitting there, or -1
    init_gap: np.ndarray
    max_gap: np.ndarray
    touches: np.ndarray  # events that moved (or re-checked) the class
    stride: int = 1
    trace: list = field(default_factory=list)  # rows (t, class_id, position, gap)

    @property
    def n_edges(self) -> int:
        return self.occupant.shape[0]

    def find(self, k: int) -> int:
        while self.parent[k] != k:
            k = self.parent[k]
        return int(k)

    def class_of(self, origin_edge: int) -> int:
        idx = np.flatnonzero(self.origins == origin_edge)
        if idx.size == 0:
            raise KeyError(f"edge {origin_edge} is not a monitored origin")
        return self.find(int(idx[0]))

    def position_of(self, origin_edge: int) -> int:
        return int(self.position[self.class_of(origin_edge)])

    def live_classes(self) -> np.ndarray:
        return np.flatnonzero(self.position >= 0)

    def members(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for k in range(self.origins.size):
            out.setdefault(self.find(k), []).append(int(self.origins[k]))
        return out

    def snapshot(self) -> "TrackerState":
        return TrackerState(
            self.origins.copy(), self.position.copy(), self.parent.copy(),
            self.occupant.copy(), self.init_gap.copy(), self.max_gap.copy(),
            self.touches.copy(), self.stride, list(self.trace),
        )


def default_origins(n_edges: int, cap: int = 4096) -> np.ndarray:
    """Every edge up to ``cap`` edges, otherwise every ``ceil(n/cap)``-th."""
    step = max(1, -(-n_edges // cap))
    return np.arange(0, n_edges, step, dtype=np.int64)


def init_trackers(origins, lattice: OpinionLattice, stride: int = 1) -> TrackerState:
    origins = np.asarray(origins, dtype=np.int64).ravel()
    n_edges = lattice.n_edges
    if origins.size == 0:
        raise ValueError("need at least one origin")
    if np.unique(origins).size != origins.size:
        raise ValueError("duplicate tracker origins")
    if origins.min() < 0 or origins.max() >= n_edges:
        raise ValueError(f"origins must lie in [0, {n_edges})")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    order = np.argsort(origins, kind="stable")
    origins = origins[order]
    n = origins.size
    occupant = np.full(n_edges, -1, dtype=np.int64)
    occupant[origins] = np.arange(n)
    g = lattice.gaps()[origins]
    return TrackerState(
        origins=origins,
        position=origins.copy(),
        parent=np.arange(n, dtype=np.int64),
        occupant=occupant,
        init_gap=g.copy(),
        max_gap=g.copy(),
        touches=np.zeros(n, dtype=np.int64),
        stride=int(stride),
    )


def window(edge: int, n_edges: int, ring: bool) -> list[int]:
    """Edges within distance one of ``edge``, current edge first, then by index."""
    nbrs = []
    for d in (-1, 1):
        f = edge + d
        if ring:
            nbrs.append(f % n_edges)
        elif 0 <= f < n_edges:
            nbrs.append(f)
    return [edge] + sorted(set(nbrs) - {edge})


def argmax_gap(edge: int, lattice: OpinionLattice) -> int:
    """Edge of the largest gap in the window of ``edge``; ties keep ``edge``,
    then go to the smaller index."""
    best, best_gap = edge, lattice.gap(edge)
    for f in window(edge, lattice.n_edges, lattice.is_ring)[1:]:
        g = lattice.gap(f)
        if g > best_gap:
            best, best_gap = f, g
    return best


def _is_adjacent(p: int, q: int, n_edges: int, ring: bool) -> bool:
    d = abs(p - q)
    if ring:
        d = min(d, n_edges - d)
    return d <= 1


def on_event(state: TrackerState, event, lattice_after_update: OpinionLattice) -> TrackerState:
    """Move every tracker within distance one of ``event.edge`` (in place)."""
    lat = lattice_after_update
    n_edges, ring = lat.n_edges, lat.is_ring
    affected = [
        int(state.occupant[q])
        for q in window(event.edge, n_edges, ring)
        if state.occupant[q] >= 0
    ]
    affected.sort()
    moves = []
    for k in affected:
        p = int(state.position[k])
        assert _is_adjacent(p, event.edge, n_edges, ring)
        moves.append((k, argmax_gap(p, lat)))
        state.occupant[p] = -1
    for k, q in moves:
        other = int(state.occupant[q])
        if other >= 0:
            keep, drop = min(k, other), max(k, other)
            state.parent[drop] = keep
            state.position[drop] = -1
            state.max_gap[keep] = max(state.max_gap[keep], state.max_gap[drop])
            state.touches[keep] = max(state.touches[keep], state.touches[drop])
            k = keep
        state.position[k] = q
        state.occupant[q] = k
    for k in sorted({state.find(k) for k, _ in moves}):
        q = int(state.position[k])
        g = lat.gap(q)
        state.max_gap[k] = max(state.max_gap[k], g)
        state.touches[k] += 1
        if state.touches[k] % state.stride == 0:
            state.trace.append((float(event.time), k, q, g))
    return state


@dataclass
class DivergenceReport:
    thresholds: list[float]
    class_ids: list[int]
    members: list[list[int]]
    max_gap: list[float]
    last_position: list[int]
    exceeded: list[list[bool]]  # per class, per threshold
    n_exceeding_top: int

    def as_dict(self) -> dict:
        return {
            "thresholds": self.thresholds,
            "n_classes": len(self.class_ids),
            "n_exceeding_top": self.n_exceeding_top,
            "n_exceeding": [
                int(sum(row[j] for row in self.exceeded)) for j in range(len(self.thresholds))
            ],
            "overall_max_gap": max(self.max_gap) if self.max_gap else 0.0,
            "classes": [
                {"class_id": c, "origins": m, "max_gap": g, "last_position": p, "exceeded": e}
                for c, m, g, p, e in zip(
                    self.class_ids, self.members, self.max_gap, self.last_position, self.exceeded
                )
            ],
        }


def divergence_stats(state: TrackerState, threshold_sequence=()) -> DivergenceReport:
    thresholds = sorted(float(x) for x in threshold_sequence)
    members = state.members()
    live = [int(k) for k in state.live_classes()]
    max_gap = [float(state.max_gap[k]) for k in live]
    exceeded = [[g > th for th in thresholds] for g in max_gap]
    top = sum(row[-1] for row in exceeded) if thresholds else 0
    return DivergenceReport(
        thresholds=thresholds,
        class_ids=live,
        members=[members[k] for k in live],
        max_gap=max_gap,
        last_position=[int(state.position[k]) for k in live],
        exceeded=exceeded,
        n_exceeding_top=int(top),
    )


def write_tracker_trace(path, rows):
    """CSV with columns ``t,class_id,position,gap``."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "class_id", "position", "gap"])
        for t, k, q, g in rows:
            w.writerow([repr(float(t)), int(k), int(q), repr(float(g))])
