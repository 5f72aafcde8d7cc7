import json
import numpy as np
import pytest

from deffuant_ar import experiments as ex
from deffuant_ar.cli import EXIT_CONFIG, EXIT_OK, main
from deffuant_ar.model import CANONICAL, validate_params


def _run(argv, capsys):
    rc = main(argv)
    out = capsys.readouterr().out
    return rc, (json.loads(out) if out.strip() else None)


def test_c0_command(capsys):
    rc, rep = _run(["c0", "--mu-plus", "0.25"], capsys)
    assert rc == EXIT_OK
    assert rep["c_star"] == pytest.approx(0.368, abs=1e-3)
    assert rep["escape_bound"] == pytest.approx(0.50, abs=1e-3)


@pytest.mark.parametrize("argv", [
    ["c0", "--theta", "2"],
    ["simulate", "--replicas", "0"],
    ["simulate", "--sites", "3"],
    ["c0", "--mu-plus", "0"],
])
def test_invalid_config_exit_code(argv, capsys):
    assert main(argv) == EXIT_CONFIG


def test_config_file_and_flag_precedence(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"theta": 0.8, "sites": 50, "seed": 3}))
    cfg = ex.ExperimentConfig.from_sources(path, sites=60)
    assert (cfg.theta, cfg.sites, cfg.seed) == (0.8, 60, 3)
    path.write_text(json.dumps({"bogus": 1}))
    with pytest.raises(ex.ConfigError):
        ex.ExperimentConfig.from_sources(path)


def _snapshot(d):
    return {p.name: p.read_bytes() for p in d.iterdir() if p.name != "timing.json"}


def test_simulate_outputs_and_determinism(tmp_path, capsys):
    argv = ["simulate", "--sites", "60", "--t-max", "20", "--replicas", "3", "--seed", "5", "--trace",
            "--out", str(tmp_path)]
    assert _run(argv, capsys)[0] == EXIT_OK
    first = _snapshot(tmp_path)
    assert _run(argv, capsys)[0] == EXIT_OK
    assert _snapshot(tmp_path) == first
    names = sorted(first) + ["timing.json"]
    assert {"summary.json", "timeseries_r0002.csv", "trackers_r0000.csv"} <= set(names)
    header = first["timeseries_r0000.csv"].decode().splitlines()[0]
    assert header == "t,max_gap,n_gaps_above_theta,mean_abs_opinion"


def test_threads_match_serial(tmp_path, capsys):
    base = ["simulate", "--sites", "60", "--t-max", "20", "--replicas", "4", "--seed", "6", "--trace"]
    _run(base + ["--out", str(tmp_path / "serial")], capsys)
    _run(base + ["--out", str(tmp_path / "par"), "--threads", "4"], capsys)
    serial, par = _snapshot(tmp_path / "serial"), _snapshot(tmp_path / "par")
    assert serial.keys() == par.keys()
    for name in serial:
        if name != "summary.json":
            assert serial[name] == par[name], name
    a, b = (json.loads(x["summary.json"]) for x in (serial, par))
    a.pop("config"), b.pop("config")
    assert a == b


def test_summary_contents(tmp_path):
    cfg = ex.ExperimentConfig(sites=100, t_max=30, replicas=2, seed=1, out=str(tmp_path))
    s = ex.cmd_simulate(cfg)
    assert s["passed"] and not s["aborted"]
    for row in s["exceedance"]:
        assert 0 <= row["fraction"] <= 1
        assert row["wilson_low"] <= row["fraction"] <= row["wilson_high"]
    for r in s["replicas"]:
        assert r["sum_drift"] <= 1e-9
        assert r["checks"]["domination_failures"] == 0
    assert s["events_total"] == sum(r["events"] for r in s["replicas"])


def test_pair_sum_drift_over_a_million_events():
    cfg = ex.ExperimentConfig(sites=1000, t_max=1100, sample_dt=100, seed=2, mu_plus=0.0)
    r = ex.run_replica(cfg, 0)
    assert r.events > 10**6
    assert r.sum_drift <= 1e-9


def test_forced_increase_canonical():
    rep = ex.forced_increase(CANONICAL)
    assert rep["K"] == 5
    assert rep["final_gap"] > 7.0
    assert rep["final_gap"] >= 1.5 ** 5 * (1 - 1e-12)
    assert rep["tracker_stayed"] and rep["outer_sites_fixed"] and rep["passed"]
    assert rep["tracker_positions"] == [2] * 5


def test_forced_increase_random_starts():
    for seed in range(20):
        x = ex.initial_gap_configuration(1.0, rng=seed)
        assert ex.forced_increase(CANONICAL, x)["passed"]


@pytest.mark.parametrize("theta", [0.1, 0.7, 1.5, 1.99])
def test_forced_increase_other_theta(theta):
    assert ex.forced_increase(validate_params(theta, 0.5, 0.25))["passed"]


def test_forced_increase_command(tmp_path, capsys):
    rc, rep = _run(["forced-increase", "--out", str(tmp_path)], capsys)
    assert rc == EXIT_OK and rep["passed"]
    assert (tmp_path / "forced_increase.json").exists()


def test_track_command(tmp_path, capsys):
    rc, rep = _run(["track", "--sites", "40", "--t-max", "10", "--out", str(tmp_path)], capsys)
    assert rc == EXIT_OK and rep["passed"]
    assert (tmp_path / "trackers_r0000.csv").exists()


def test_xprocess_command(tmp_path, capsys):
    rc, rep = _run(["xprocess", "--mc-replicas", "20000", "--out", str(tmp_path)], capsys)
    assert rc == EXIT_OK and rep["passed"]
    assert rep["escape"]["p_hat"] >= 0.5 - 3 * rep["escape"]["sigma"]


def test_meanfield_command(tmp_path, capsys):
    rc, rep = _run(["meanfield", "--A", "4", "--da", "0.04", "--dt", "0.01", "--t-max", "4",
                    "--out", str(tmp_path)], capsys)
    assert rc == EXIT_OK
    assert rep["escalation"]["intervals_ok"] and rep["escalation"]["integral_ok"]
    assert (tmp_path / "meanfield.csv").exists()


def test_verify_quick(capsys):
    rc, rep = _run(["verify", "--quick"], capsys)
    assert rc == EXIT_OK and rep["passed"]
    assert set(rep["lemmas"]) >= {"interaction", "align", "control_gap", "increase_gap", "escalation"}


def test_classic_limit_gaps_shrink():
    from deffuant_ar.model import initial_config
    from deffuant_ar.simulation import LatticeSimulation

    p = validate_params(1.5, 0.5, 0.0)
    sim = LatticeSimulation.create(p, initial_config(500, "ring", rng=4), rng=5)
    sim.advance(400.0)
    g = sim.lattice.gaps()
    assert np.mean(g > 0.01) < 0.05
    assert g.max() < 0.05


def test_replica_seeds_are_independent():
    a0, c0 = ex.replica_seeds(1, 0)
    a1, _ = ex.replica_seeds(1, 1)
    x, y, z = a0.random(4), c0.random(4), a1.random(4)
    assert not np.array_equal(x, y) and not np.array_equal(x, z)


def test_svg_output(tmp_path, capsys):
    pytest.importorskip("matplotlib")
    rc, _ = _run(["simulate", "--sites", "40", "--t-max", "5", "--svg", "--out", str(tmp_path)], capsys)
    assert rc == EXIT_OK
    assert (tmp_path / "gaps.svg").read_text().lstrip().startswith("<?xml")
