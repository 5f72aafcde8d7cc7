import math

import numpy as np
import pytest
from scipy import stats

from deffuant_ar.events import (
    Event,
    EventStream,
    count_interactions,
    next_event,
    read_trace_csv,
    replica_rng,
    write_trace_csv,
)


def test_inter_arrival_mean():
    s = EventStream(1000, rng=1)
    times, _ = s.take(10**6)
    waits = np.diff(np.concatenate([[0.0], times]))
    assert abs(waits.mean() - 1e-3) <= 3 * 1e-3 / 1e3


def test_edge_marks_uniform():
    _, edges = EventStream(1000, rng=2).take(10**6)
    counts = np.bincount(edges, minlength=1000)
    assert stats.chisquare(counts).pvalue > 0.01


def test_same_seed_same_stream():
    a = EventStream(50, rng=3)
    b = EventStream(50, rng=3)
    ta, ea = a.take(10**4)
    evs = [next_event(b) for _ in range(10**4)]
    assert np.array_equal(ta, [e.time for e in evs])
    assert np.array_equal(ea, [e.edge for e in evs])


def test_slicing_does_not_change_realisation():
    a = EventStream(20, rng=4, block=100)
    b = EventStream(20, rng=4, block=100)
    ta, ea = a.take(1000)
    parts = [b.take_until(t) for t in (0.3, 1.7, 10.0)]
    tb = np.concatenate([p[0] for p in parts])
    eb = np.concatenate([p[1] for p in parts])
    n = tb.size
    assert np.array_equal(ta[:n], tb) and np.array_equal(ea[:n], eb)
    rest, _ = b.take(1000 - n)
    assert np.array_equal(ta[n:], rest)


def test_times_strictly_increasing():
    t, e = EventStream(7, rng=5, block=257).take(50_000)
    assert np.all(np.diff(t) > 0)
    assert e.min() >= 0 and e.max() < 7


def test_take_until_respects_bound():
    s = EventStream(10, rng=6)
    t, _ = s.take_until(5.0)
    assert t.size and t.max() < 5.0
    nxt = s.next_event()
    assert nxt.time >= 5.0


def test_count_interactions_forms():
    assert count_interactions([], 0, (0, 1)) == 0
    assert count_interactions((np.empty(0), np.empty(0, int)), 0, (0, 1)) == 0
    trace = [Event(0.1, 2), Event(0.5, 1), Event(0.9, 2), Event(1.2, 2)]
    assert count_interactions(trace, 2, (0.0, 1.0)) == 2
    arr = (np.array([e.time for e in trace]), np.array([e.edge for e in trace]))
    assert count_interactions(arr, 2, (0.0, 1.0)) == 2
    assert count_interactions(arr, 1, (0.6, 2.0)) == 0


def _unit_window_counts(n_windows, n_edges=4, seed=8):
    # disjoint unit windows of one long stream are independent Poisson(1) counts per edge
    t, e = EventStream(n_edges, rng=seed).take_until(float(n_windows))
    counts = np.stack([np.bincount(t[e == k].astype(np.int64), minlength=n_windows) for k in range(n_edges)])
    return counts


def test_single_edge_count_is_poisson_one():
    counts = _unit_window_counts(10**5)
    I = counts[0]
    p0 = (I == 0).mean()
    sd = math.sqrt(math.exp(-1) * (1 - math.exp(-1)) / I.size)
    assert abs(p0 - math.exp(-1)) <= 3 * sd
    assert abs(I.mean() - 1) <= 3 / math.sqrt(I.size)


def test_window_count_agrees_with_count_interactions():
    s = EventStream(4, rng=9)
    t, e = s.take_until(30.0)
    counts = _unit_window_counts(30, seed=9)
    for w in (0, 7, 29):
        assert count_interactions((t, e), 0, (w, w + 1)) == counts[0, w]


def test_single_edge_interarrivals_exponential_one():
    t, e = EventStream(5, rng=10).take(200_000)
    waits = np.diff(t[e == 3])
    assert stats.kstest(waits, "expon").pvalue > 0.01


def test_disjoint_edges_uncorrelated():
    counts = _unit_window_counts(50_000, n_edges=4, seed=11)
    c = np.corrcoef(counts)
    off = c[~np.eye(4, dtype=bool)]
    # multinomial splitting makes counts independent; 3 sd band of a correlation
    assert np.abs(off).max() <= 3 / math.sqrt(50_000) * 1.5


@pytest.mark.slow
def test_isolated_burst_probability():
    """Five independent Poisson(1) counts: centre equals 5, four neighbours zero."""
    rng = np.random.default_rng(12)
    draws, hits = 10**8, 0
    for _ in range(25):
        I = rng.poisson(1.0, size=(5, draws // 25))
        hits += int(np.count_nonzero((I[0] == 5) & (I[1:] == 0).all(axis=0)))
    p = math.exp(-5) / math.factorial(5)
    assert abs(hits / draws - p) <= 3 * math.sqrt(p * (1 - p) / draws)


def test_trace_csv_roundtrip(tmp_path):
    t, e = EventStream(6, rng=13).take(100)
    write_trace_csv(tmp_path / "trace.csv", t, e)
    t2, e2 = read_trace_csv(tmp_path / "trace.csv")
    assert np.array_equal(t, t2) and np.array_equal(e, e2)


def test_replica_rngs_independent_and_reproducible():
    a = replica_rng(5, 0).random(5)
    assert np.array_equal(a, replica_rng(5, 0).random(5))
    assert not np.array_equal(a, replica_rng(5, 1).random(5))


def test_take_until_across_many_refills():
    s = EventStream(10, rng=14, block=64)
    t, _ = s.take_until(100.0)
    assert np.all(np.diff(t) > 0) and t[-1] < 100.0
    # rate 10 over 100 time units, Poisson count within 5 sd
    assert abs(t.size - 1000) < 5 * math.sqrt(1000)
    assert s.next_event().time > t[-1]
