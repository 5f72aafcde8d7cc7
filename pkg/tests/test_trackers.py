import csv
from types import SimpleNamespace

import numpy as np
import pytest

from deffuant_ar.events import Event, EventStream
from deffuant_ar.model import CANONICAL, OpinionLattice, initial_config
from deffuant_ar.simulation import DominationFailure, LatticeSimulation
from deffuant_ar.trackers import (
    argmax_gap,
    default_origins,
    divergence_stats,
    init_trackers,
    on_event,
    window,
    write_tracker_trace,
)


def _lattice_with_gaps(gaps, ring=False):
    """Segment whose consecutive gaps are ``gaps`` (opinions increase)."""
    x = np.concatenate([[0.0], np.cumsum(gaps)])
    return OpinionLattice(x, "ring" if ring else "segment")


def test_all_edges_singletons():
    lat = initial_config(10, "ring", rng=0)
    st = init_trackers(range(10), lat)
    assert len(st.live_classes()) == 10
    assert list(st.position) == list(range(10))
    assert np.array_equal(st.max_gap, lat.gaps())


def test_single_origin():
    lat = initial_config(10, "ring", rng=0)
    st = init_trackers([4], lat)
    assert st.position_of(4) == 4 and st.class_of(4) == 0


@pytest.mark.parametrize("origins", [[1, 1], [0, 10], [-1], []])
def test_bad_origins_rejected(origins):
    with pytest.raises(ValueError):
        init_trackers(origins, initial_config(10, "ring", rng=0))


def test_default_origins():
    assert np.array_equal(default_origins(100), np.arange(100))
    o = default_origins(10_000)
    assert o[1] - o[0] == 3 and o.size <= 4096


def test_window_shapes():
    assert window(0, 10, ring=True) == [0, 1, 9]
    assert window(0, 10, ring=False) == [0, 1]
    assert window(9, 10, ring=False) == [9, 8]
    assert window(5, 10, ring=False) == [5, 4, 6]


def test_event_out_of_window_leaves_tracker():
    lat = _lattice_with_gaps([1, 2, 3, 4, 5, 6, 7])
    st = init_trackers([2], lat)
    on_event(st, Event(0.1, 4), lat)
    assert st.position_of(2) == 2 and st.touches[0] == 0


def test_tracker_stays_on_largest_gap():
    lat = _lattice_with_gaps([0.5, 1.0, 5.0, 2.0, 0.5])
    st = init_trackers([2], lat)
    on_event(st, Event(0.1, 3), lat)
    assert st.position_of(2) == 2


def test_tracker_jumps_to_larger_neighbour():
    lat = _lattice_with_gaps([0.5, 1.0, 5.0, 2.0, 0.5])
    st = init_trackers([3], lat)
    on_event(st, Event(0.1, 3), lat)
    assert st.position_of(3) == 2
    assert st.max_gap[0] == 5.0


def test_ties_prefer_current_then_smaller_index():
    lat = _lattice_with_gaps([3.0, 3.0, 3.0, 1.0])
    assert argmax_gap(1, lat) == 1
    lat = _lattice_with_gaps([3.0, 1.0, 3.0, 1.0])
    assert argmax_gap(1, lat) == 0


def test_two_trackers_merge_into_smaller_id():
    lat = _lattice_with_gaps([0.5, 1.0, 5.0, 2.0, 0.5])
    st = init_trackers([1, 3], lat)
    on_event(st, Event(0.1, 2), lat)
    assert st.class_of(1) == st.class_of(3) == 0
    assert st.position_of(1) == st.position_of(3) == 2
    assert list(st.live_classes()) == [0]
    assert st.members() == {0: [1, 3]}


def test_merged_classes_never_separate():
    lat = initial_config(40, "ring", rng=1)
    st = init_trackers(range(40), lat)
    stream = EventStream(lat.n_edges, rng=2)
    seen = {}
    for _ in range(5000):
        ev = stream.next_event()
        lat.apply_interaction(ev.edge, CANONICAL)
        on_event(st, ev, lat)
        for k in range(40):
            c = st.find(k)
            if k in seen:
                assert st.find(seen[k]) == c
            seen[k] = c
    pos = {st.find(k): st.position[st.find(k)] for k in range(40)}
    assert len(set(pos.values())) == len(pos)


def test_divergence_without_events():
    lat = initial_config(12, "ring", rng=3)
    st = init_trackers(range(12), lat)
    rep = divergence_stats(st, [0.5, 1.0])
    assert rep.max_gap == list(lat.gaps())
    assert rep.thresholds == [0.5, 1.0]
    assert rep.n_exceeding_top == int(np.count_nonzero(lat.gaps() > 1.0))


def test_divergence_empty_thresholds():
    lat = initial_config(12, "ring", rng=3)
    rep = divergence_stats(init_trackers(range(12), lat), [])
    d = rep.as_dict()
    assert d["n_exceeding"] == [] and d["n_exceeding_top"] == 0
    assert len(d["classes"]) == 12


def _python_reference(params, lattice, origins, times, edges, stride):
    st = init_trackers(origins, lattice, stride=stride)
    for t, e in zip(times, edges):
        lattice.apply_interaction(int(e), params)
        on_event(st, Event(float(t), int(e)), lattice)
    return st


@pytest.mark.parametrize("boundary", ["ring", "segment"])
def test_compiled_kernel_matches_reference(boundary):
    lat = initial_config(30, boundary, rng=4)
    times, edges = EventStream(lat.n_edges, rng=5).take(20_000)
    ref_lat = lat.copy()
    origins = np.arange(0, lat.n_edges, 2)
    ref = _python_reference(CANONICAL, ref_lat, origins, times, edges, stride=3)
    sim = LatticeSimulation.create(CANONICAL, lat, rng=6, origins=origins, stride=3)
    sim.run_events(times, edges)
    assert np.array_equal(sim.lattice.opinions, ref_lat.opinions)
    for name in ("position", "parent", "occupant", "max_gap", "touches"):
        assert np.array_equal(getattr(sim.trackers, name), getattr(ref, name)), name
    assert sim.trackers.trace == ref.trace


def test_live_checks_never_fire():
    sim = LatticeSimulation.create(CANONICAL, initial_config(200, "ring", rng=7), rng=8)
    sim.advance(60.0)
    c = sim.checks
    assert c.ok and c.domination_checks > 0 and c.own_edge_checks > 0
    assert c.worst_domination_margin >= 0


def test_live_check_detects_broken_dynamics():
    lat = _lattice_with_gaps([10.0, 0.2, 10.0, 0.2, 10.0])
    sim = LatticeSimulation.create(CANONICAL, lat.copy(), rng=0, origins=[2])
    sim.run_events([0.1], [1])
    assert sim.checks.ok and sim.checks.domination_checks == 1
    # demand a contraction factor the dynamics cannot deliver
    fields = {k: getattr(CANONICAL, k) for k in ("theta", "mu_minus", "mu_plus", "D", "rho_plus")}
    greedy = SimpleNamespace(**fields, rho_minus=1.5)
    broken = LatticeSimulation.create(greedy, lat.copy(), rng=0, origins=[2])
    with pytest.raises(DominationFailure):
        broken.run_events([0.1], [1])
    lenient = LatticeSimulation.create(greedy, lat.copy(), rng=0, origins=[2], strict=False)
    lenient.run_events([0.1], [1])
    assert lenient.checks.domination_failures == 1


def test_trace_csv(tmp_path):
    lat = initial_config(20, "ring", rng=9)
    sim = LatticeSimulation.create(CANONICAL, lat, rng=10)
    sim.advance(5.0)
    write_tracker_trace(tmp_path / "tr.csv", sim.trackers.trace)
    rows = list(csv.reader((tmp_path / "tr.csv").open()))
    assert rows[0] == ["t", "class_id", "position", "gap"]
    assert len(rows) - 1 == len(sim.trackers.trace) > 0
