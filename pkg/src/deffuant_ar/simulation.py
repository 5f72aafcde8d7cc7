"""Compiled event loop for the lattice dynamics with live tracker updates.

The kernel applies a block of events to the opinions, moves the trackers
exactly as :func:`deffuant_ar.trackers.on_event` does, and checks on the fly
that

* each interaction conserves the pair sum,
* a tracker whose gap exceeds ``D`` keeps a window maximum of at least
  ``rho_minus`` times that gap after an interaction on a neighbouring edge,
* a tracker whose gap exceeds ``theta`` sees it multiplied by ``rho_plus``
  after an interaction on its own edge.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .events import EventStream
from .model import ModelParams, OpinionLattice
from .trackers import TrackerState, init_trackers

REL_TOL = 1e-12


class NumericalAbort(RuntimeError):
    """Raised when the opinion state stops being finite."""

    def __init__(self, time: float, message: str = ""):
        self.time = time
        super().__init__(message or f"non-finite opinion at t={time!r}")


class DominationFailure(AssertionError):
    """Raised when the live gap-domination check fails."""


@njit(cache=True, inline="always")
def _gap(x, k, n_sites):
    j = k + 1
    if j == n_sites:
        j = 0
    return abs(x[j] - x[k])


@njit(cache=True, nogil=True)
def _run_block(
    x, ring, times, edges,
    theta, mu_minus, mu_plus, D, rho_minus, rho_plus,
    occupant, position, parent, max_gap, touches, stride,
    tr_t, tr_k, tr_p, tr_g, stats,
):
    """Process ``edges``/``times`` in order. Returns number of trace rows,
    or ``-(i + 1)`` if event ``i`` produced a non-finite opinion.

    ``stats`` accumulates: [dom_checks, dom_fail, own_checks, own_fail,
    events, worst_dom_margin, worst_pair_sum_err].
    """
    n_sites = x.shape[0]
    n_edges = occupant.shape[0]
    n_rows = 0
    aff_k = np.empty(3, np.int64)
    aff_p = np.empty(3, np.int64)
    aff_g = np.empty(3, np.float64)
    new_p = np.empty(3, np.int64)
    win = np.empty(3, np.int64)
    for i in range(edges.shape[0]):
        e = edges[i]
        # trackers in the window of the event, by increasing class id
        na = 0
        for d in (-1, 0, 1):
            q = e + d
            if ring:
                if q < 0:
                    q += n_edges
                elif q >= n_edges:
                    q -= n_edges
            elif q < 0 or q >= n_edges:
                continue
            k = occupant[q]
            if k >= 0:
                j = na
                while j > 0 and aff_k[j - 1] > k:
                    aff_k[j] = aff_k[j - 1]
                    j -= 1
                aff_k[j] = k
                na += 1
        for j in range(na):
            aff_p[j] = position[aff_k[j]]
            aff_g[j] = _gap(x, aff_p[j], n_sites)

        l = e
        r = e + 1
        if r == n_sites:
            r = 0
        a = x[l]
        b = x[r]
        dlt = b - a
        if abs(dlt) <= theta:
            m = mu_minus
        else:
            m = -mu_plus
        na_ = a + m * dlt
        nb_ = b - m * dlt
        if not (math.isfinite(na_) and math.isfinite(nb_)):
            return -(i + 1)
        x[l] = na_
        x[r] = nb_
        err = abs((na_ + nb_) - (a + b))
        scale = abs(a) + abs(b)
        if scale > 0.0:
            err /= scale
        if err > stats[6]:
            stats[6] = err
        stats[4] += 1.0

        for j in range(na):
            p = aff_p[j]
            # window: current edge first, then remaining edges by index
            nw = 1
            win[0] = p
            lo = p - 1
            hi = p + 1
            if ring:
                if lo < 0:
                    lo += n_edges
                if hi >= n_edges:
                    hi -= n_edges
                if lo > hi:
                    lo, hi = hi, lo
                win[1] = lo
                win[2] = hi
                nw = 3
            else:
                if lo >= 0:
                    win[nw] = lo
                    nw += 1
                if hi < n_edges:
                    win[nw] = hi
                    nw += 1
            best = win[0]
            best_g = _gap(x, best, n_sites)
            for w in range(1, nw):
                g = _gap(x, win[w], n_sites)
                if g > best_g:
                    best = win[w]
                    best_g = g
            new_p[j] = best
            g0 = aff_g[j]
            # rounding in the moved pair scales with its magnitude, not the gap
            if D > 0.0 and p != e and g0 > D:
                stats[0] += 1.0
                margin = best_g / g0 - rho_minus
                if margin < stats[5]:
                    stats[5] = margin
                if best_g < rho_minus * g0 - REL_TOL * (g0 + scale):
                    stats[1] += 1.0
            if mu_plus > 0.0 and p == e and g0 > theta:
                stats[2] += 1.0
                own = _gap(x, p, n_sites)
                if abs(own - rho_plus * g0) > REL_TOL * (rho_plus * g0 + scale):
                    stats[3] += 1.0
            occupant[p] = -1

        for j in range(na):
            k = aff_k[j]
            q = new_p[j]
            other = occupant[q]
            if other >= 0:
                keep = min(k, other)
                drop = max(k, other)
                parent[drop] = keep
                position[drop] = -1
                if max_gap[drop] > max_gap[keep]:
                    max_gap[keep] = max_gap[drop]
                if touches[drop] > touches[keep]:
                    touches[keep] = touches[drop]
                k = keep
                aff_k[j] = keep
            position[k] = q
            occupant[q] = k

        # touch surviving classes once each, in increasing id order
        for j in range(na):
            k = aff_k[j]
            while parent[k] != k:
                k = parent[k]
            aff_k[j] = k
        # sort unique survivors and record
        nu = 0
        for j in range(na):
            k = aff_k[j]
            dup = False
            for jj in range(nu):
                if aff_p[jj] == k:
                    dup = True
            if not dup:
                jj = nu
                while jj > 0 and aff_p[jj - 1] > k:
                    aff_p[jj] = aff_p[jj - 1]
                    jj -= 1
                aff_p[jj] = k
                nu += 1
        for j in range(nu):
            k = aff_p[j]
            q = position[k]
            g = _gap(x, q, n_sites)
            if g > max_gap[k]:
                max_gap[k] = g
            touches[k] += 1
            if touches[k] % stride == 0:
                tr_t[n_rows] = times[i]
                tr_k[n_rows] = k
                tr_p[n_rows] = q
                tr_g[n_rows] = g
                n_rows += 1
    return n_rows


@dataclass
class LiveChecks:
    domination_checks: int = 0
    domination_failures: int = 0
    own_edge_checks: int = 0
    own_edge_failures: int = 0
    events: int = 0
    worst_domination_margin: float = math.inf
    worst_pair_sum_error: float = 0.0

    @classmethod
    def from_stats(cls, s) -> "LiveChecks":
        return cls(int(s[0]), int(s[1]), int(s[2]), int(s[3]), int(s[4]), float(s[5]), float(s[6]))

    @property
    def ok(self) -> bool:
        return self.domination_failures == 0 and self.own_edge_failures == 0

    def as_dict(self) -> dict:
        d = dict(self.__dict__)
        if not math.isfinite(d["worst_domination_margin"]):
            d["worst_domination_margin"] = None
        return d


@dataclass
class LatticeSimulation:
    """Lattice, event stream and trackers advanced together.

    ``strict`` raises :class:`DominationFailure` as soon as a live check
    fails; otherwise failures are only counted in :attr:`checks`.
    """

    params: ModelParams
    lattice: OpinionLattice
    stream: EventStream
    trackers: TrackerState
    strict: bool = True
    chunk: int = 1 << 16
    _stats: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self._stats = np.zeros(7)
        self._stats[5] = np.inf

    @classmethod
    def create(cls, params, lattice, rng, origins=None, stride=1, strict=True):
        from .trackers import default_origins

        if origins is None:
            origins = default_origins(lattice.n_edges)
        trackers = init_trackers(origins, lattice, stride=stride)
        return cls(params, lattice, EventStream(lattice.n_edges, rng), trackers, strict)

    @property
    def time(self) -> float:
        return self.stream.current_time

    @property
    def checks(self) -> LiveChecks:
        return LiveChecks.from_stats(self._stats)

    def _apply(self, times, edges):
        p = self.params
        st = self.trackers
        cap = 3 * edges.size // st.stride + 3
        tr_t = np.empty(cap)
        tr_k = np.empty(cap, np.int64)
        tr_p = np.empty(cap, np.int64)
        tr_g = np.empty(cap)
        n = _run_block(
            self.lattice.opinions, self.lattice.is_ring, times, edges,
            p.theta, p.mu_minus, p.mu_plus, p.D or 0.0, p.rho_minus, p.rho_plus,
            st.occupant, st.position, st.parent, st.max_gap, st.touches, st.stride,
            tr_t, tr_k, tr_p, tr_g, self._stats,
        )
        if n < 0:
            raise NumericalAbort(float(times[-n - 1]))
        st.trace.extend(zip(tr_t[:n].tolist(), tr_k[:n].tolist(), tr_p[:n].tolist(), tr_g[:n].tolist()))
        if self.strict and not self.checks.ok:
            raise DominationFailure(f"live domination check failed before t={times[-1]!r}: {self.checks}")

    def advance(self, t_end: float) -> int:
        """Process every event with time below ``t_end``; returns the count."""
        total = 0
        while True:
            times, edges = self.stream.take_until(t_end, max_events=self.chunk)
            if times.size == 0:
                break
            self._apply(times, edges)
            total += times.size
            if times.size < self.chunk:
                break
        return total

    def run_events(self, times, edges):
        """Apply an explicit event sequence (bypassing the stream)."""
        self._apply(np.asarray(times, dtype=float), np.asarray(edges, dtype=np.int64))

    def observables(self) -> tuple[float, int, float]:
        """``(max_gap, n_gaps_above_theta, mean_abs_opinion)`` right now."""
        g = self.lattice.gaps()
        return float(g.max()), int(np.count_nonzero(g > self.params.theta)), float(np.abs(self.lattice.opinions).mean())
