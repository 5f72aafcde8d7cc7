"""Reproducible experiment drivers behind the command line.

Every driver takes an :class:`ExperimentConfig`, is deterministic given the
config (including its seed) and returns a JSON-serialisable dict. Wall-clock
timings are kept out of the result dicts so that identical configs give
byte-identical output files.
"""
from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import analysis as an
from . import meanfield as mf
from .events import Event, EventStream
from .model import Boundary, ModelParams, OpinionLattice, ParameterError, interact_array, validate_params
from .simulation import LatticeSimulation, NumericalAbort
from .trackers import default_origins, divergence_stats, init_trackers, on_event, write_tracker_trace


class ConfigError(ValueError):
    pass


DEFAULT_THRESHOLDS = (1e1, 1e2, 1e3, 1e4)


@dataclass
class ExperimentConfig:
    theta: float = 1.0
    mu_minus: float = 0.5
    mu_plus: float = 0.25
    sites: int = 1000
    boundary: str = "ring"
    t_max: float = 200.0
    seed: int = 0
    replicas: int = 1
    threads: int = 1
    origin_step: int = 0  # 0: every edge up to 4096 edges, else every ceil(n/4096)-th
    trace_stride: int = 1
    sample_dt: float = 1.0
    thresholds: list = field(default_factory=lambda: list(DEFAULT_THRESHOLDS))
    out: str | None = None
    write_traces: bool = False
    svg: bool = False
    # scalar process / certificate
    x0_over_D: float = 2.001
    n_over_D: float = 1000.0
    horizon: float = 50.0
    mc_replicas: int = 100_000
    c0_tol: float = 1e-9
    # mean field
    A: float = 8.0
    da: float = 0.02
    dt: float = 0.005

    def __post_init__(self):
        try:
            self.params = validate_params(self.theta, self.mu_minus, self.mu_plus)
        except ParameterError as exc:
            raise ConfigError(str(exc)) from exc
        if self.replicas < 1:
            raise ConfigError("replicas must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if not self.t_max > 0:
            raise ConfigError("t_max must be positive")
        if self.sites < 4:
            raise ConfigError("sites must be >= 4")
        if self.boundary not in ("ring", "segment"):
            raise ConfigError("boundary must be 'ring' or 'segment'")
        if self.sample_dt <= 0 or self.trace_stride < 1 or self.origin_step < 0:
            raise ConfigError("sample_dt, trace_stride and origin_step must be positive")
        self.thresholds = sorted(float(x) for x in self.thresholds)
        if self.out is not None:
            out = Path(self.out)
            try:
                out.mkdir(parents=True, exist_ok=True)
            except OSError as exc:
                raise ConfigError(f"cannot create output directory {out}: {exc}") from exc

    @classmethod
    def from_sources(cls, path=None, defaults=None, **overrides) -> "ExperimentConfig":
        """``defaults``, then a flat JSON file, then non-``None`` overrides."""
        data = dict(defaults or {})
        if path is not None:
            try:
                loaded = json.loads(Path(path).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from exc
            if not isinstance(loaded, dict):
                raise ConfigError("config file must hold a flat JSON object")
            data.update(loaded)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def echo(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def origins(self, n_edges: int) -> np.ndarray:
        if self.origin_step:
            return np.arange(0, n_edges, self.origin_step, dtype=np.int64)
        return default_origins(n_edges)


def replica_seeds(seed: int, replica: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent generators for the initial opinions and the clocks."""
    ss = np.random.SeedSequence([int(seed), int(replica)])
    a, b = ss.spawn(2)
    return np.random.default_rng(a), np.random.default_rng(b)


def dump_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


# -- lattice runs ---------------------------------------------------------------


TIMESERIES_COLUMNS = ("t", "max_gap", "n_gaps_above_theta", "mean_abs_opinion")


@dataclass
class ReplicaResult:
    replica: int
    events: int
    timeseries: list
    divergence: dict
    checks: dict
    sum_drift: float
    aborted_at: float | None = None
    trace: list = field(default_factory=list)


def run_replica(cfg: ExperimentConfig, replica: int, keep_trace: bool = False) -> ReplicaResult:
    rng_init, rng_clock = replica_seeds(cfg.seed, replica)
    lattice = OpinionLattice(rng_init.uniform(-1.0, 1.0, cfg.sites), Boundary(cfg.boundary))
    s0 = math.fsum(lattice.opinions)
    sim = LatticeSimulation(
        cfg.params, lattice, EventStream(lattice.n_edges, rng_clock),
        init_trackers(cfg.origins(lattice.n_edges), lattice, stride=cfg.trace_stride),
        strict=False,
    )
    rows = [(0.0, *sim.observables())]
    n_samples = int(math.ceil(cfg.t_max / cfg.sample_dt - 1e-9))
    events = 0
    aborted = None
    for k in range(1, n_samples + 1):
        t = min(k * cfg.sample_dt, cfg.t_max)
        try:
            events += sim.advance(t)
        except NumericalAbort as exc:
            aborted = exc.time
            break
        rows.append((t, *sim.observables()))
    x = lattice.opinions
    scale = max(float(np.abs(x).sum()), 1e-300)
    drift = abs(math.fsum(x) - s0) / scale if np.all(np.isfinite(x)) else math.inf
    rep = divergence_stats(sim.trackers, cfg.thresholds).as_dict()
    return ReplicaResult(
        replica=replica,
        events=events,
        timeseries=rows,
        divergence=rep,
        checks=sim.checks.as_dict(),
        sum_drift=drift,
        aborted_at=aborted,
        trace=sim.trackers.trace if keep_trace else [],
    )


def _write_timeseries(path, rows):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TIMESERIES_COLUMNS)
        for t, g, n, m in rows:
            w.writerow([repr(float(t)), repr(float(g)), int(n), repr(float(m))])


def _run_replicas(cfg: ExperimentConfig, keep_trace: bool) -> list[ReplicaResult]:
    work = range(cfg.replicas)
    if cfg.threads > 1 and cfg.replicas > 1:
        with ThreadPoolExecutor(cfg.threads) as pool:
            return list(pool.map(lambda r: run_replica(cfg, r, keep_trace), work))
    return [run_replica(cfg, r, keep_trace) for r in work]


def summarise(cfg: ExperimentConfig, results: list[ReplicaResult]) -> dict:
    n = len(results)
    per_threshold = []
    for j, th in enumerate(cfg.thresholds):
        hits = sum(1 for r in results if r.divergence["n_exceeding"][j] > 0)
        est = an.binomial_estimate(hits, n)
        per_threshold.append({
            "threshold": th, "replicas_exceeding": hits, "fraction": est.p_hat,
            "wilson_low": est.ci_low, "wilson_high": est.ci_high,
        })
    ring = cfg.boundary == "ring"
    failures = []
    for r in results:
        c = r.checks
        if c["domination_failures"] or c["own_edge_failures"]:
            failures.append(f"replica {r.replica}: live domination check failed")
        if ring and r.aborted_at is None and r.sum_drift > 1e-9:
            failures.append(f"replica {r.replica}: opinion-sum drift {r.sum_drift:.3g}")
    return {
        "config": cfg.echo(),
        "derived": cfg.params.as_dict(),
        "events_total": sum(r.events for r in results),
        "exceedance": per_threshold,
        "replicas": [
            {
                "replica": r.replica,
                "events": r.events,
                "aborted_at": r.aborted_at,
                "sum_drift": r.sum_drift,
                "checks": r.checks,
                "n_classes": r.divergence["n_classes"],
                "n_exceeding": r.divergence["n_exceeding"],
                "overall_max_gap": r.divergence["overall_max_gap"],
                "final": dict(zip(TIMESERIES_COLUMNS, r.timeseries[-1])),
            }
            for r in results
        ],
        "aborted": [r.replica for r in results if r.aborted_at is not None],
        "property_failures": failures,
        "passed": not failures,
    }


def cmd_simulate(cfg: ExperimentConfig) -> dict:
    """Run all replicas; write per-replica time series (and optional tracker
    traces) plus ``summary.json`` when an output directory is set."""
    t0 = time.perf_counter()
    results = _run_replicas(cfg, keep_trace=cfg.write_traces)
    summary = summarise(cfg, results)
    if cfg.out:
        out = Path(cfg.out)
        for r in results:
            _write_timeseries(out / f"timeseries_r{r.replica:04d}.csv", r.timeseries)
            if cfg.write_traces:
                write_tracker_trace(out / f"trackers_r{r.replica:04d}.csv", r.trace)
        dump_json(summary, out / "summary.json")
        dump_json({"wall_clock_s": time.perf_counter() - t0}, out / "timing.json")
        if cfg.svg:
            from .plotting import plot_timeseries

            plot_timeseries([out / f"timeseries_r{r.replica:04d}.csv" for r in results], out / "gaps.svg")
    return summary


def cmd_track(cfg: ExperimentConfig, replica: int = 0) -> dict:
    """One replica with the full tracker trace."""
    r = run_replica(cfg, replica, keep_trace=True)
    report = {
        "config": cfg.echo(),
        "replica": replica,
        "events": r.events,
        "checks": r.checks,
        "aborted_at": r.aborted_at,
        "divergence": r.divergence,
        "passed": not (r.checks["domination_failures"] or r.checks["own_edge_failures"]),
    }
    if cfg.out:
        out = Path(cfg.out)
        write_tracker_trace(out / f"trackers_r{replica:04d}.csv", r.trace)
        _write_timeseries(out / f"timeseries_r{replica:04d}.csv", r.timeseries)
        dump_json(report, out / "track.json")
    return report


# -- deterministic forced sequence ------------------------------------------------


def initial_gap_configuration(theta: float, rng=None) -> np.ndarray:
    """Six opinions on a segment whose middle edge (edge 2) has a gap above
    ``theta`` and whose two adjacent edges have gaps below it.

    Without ``rng`` the midpoint of each admissible range is used; with one,
    the values are drawn uniformly from those ranges.
    """
    if not 0 < theta < 2:
        raise ParameterError("theta must lie in (0, 2)")
    pick = (lambda lo, hi: 0.5 * (lo + hi)) if rng is None else np.random.default_rng(rng).uniform
    left = pick(theta / 2, 1.0)
    right = pick(-1.0, -theta / 2)
    far_left = left - pick(0.0, theta / 2)
    far_right = right + pick(0.0, theta / 2)
    return np.array([far_left, far_left, left, right, far_right, far_right], dtype=float)


def forced_increase(params: ModelParams, opinions=None) -> dict:
    """Apply exactly ``K`` interactions on the middle edge of a six-site
    segment and none elsewhere; report the final gap and tracker position."""
    params.require_repulsion()
    K = params.K
    if K is None or K < 1:
        raise ParameterError("K must be at least 1")
    x = initial_gap_configuration(params.theta) if opinions is None else np.array(opinions, dtype=float)
    lat = OpinionLattice(x, Boundary.SEGMENT)
    e = 2
    g = lat.gaps()
    if not (g[e - 1] < params.theta < g[e] and g[e + 1] < params.theta):
        raise ParameterError("initial configuration does not satisfy the initial-gap event")
    initial = lat.opinions.copy()
    trackers = init_trackers([e], lat)
    positions = []
    gaps = [float(g[e])]
    for i in range(K):
        lat.apply_interaction(e, params)
        on_event(trackers, Event(float(i + 1) / (K + 1), e), lat)
        positions.append(trackers.position_of(e))
        gaps.append(float(lat.gap(e)))
    final = float(gaps[-1])
    target = params.theta * params.rho_plus ** K
    stayed = all(p == e for p in positions)
    outer_fixed = initial[0] == lat.opinions[0] and initial[1] == lat.opinions[1] \
        and initial[4] == lat.opinions[4] and initial[5] == lat.opinions[5]
    return {
        "K": K,
        "initial_opinions": initial.tolist(),
        "final_opinions": lat.opinions.tolist(),
        "gaps": gaps,
        "final_gap": final,
        "theta_rho_plus_K": target,
        "two_D": 2 * params.D,
        "tracker_positions": positions,
        "tracker_stayed": stayed,
        "outer_sites_fixed": bool(outer_fixed),
        "passed": bool(stayed and final > 2 * params.D and final >= target * (1 - 1e-12)),
    }


def cmd_forced_increase(cfg: ExperimentConfig) -> dict:
    rep = {"config": cfg.echo(), **forced_increase(cfg.params)}
    if cfg.out:
        dump_json(rep, Path(cfg.out) / "forced_increase.json")
    return rep


# -- scalar process and certificate ---------------------------------------------


def cmd_c0(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    cert = an.find_c0(p, cfg.c0_tol)
    rep = {
        "mu_plus": p.mu_plus,
        "rho_minus": p.rho_minus,
        "rho_plus": p.rho_plus,
        "log_drift": an.log_drift(p),
        **cert.as_dict(),
        "theorem_lower_bound": an.theorem_lower_bound(p, cert),
        "log_theorem_lower_bound": an.theorem_lower_bound(p, cert, log=True),
    }
    if cfg.out:
        dump_json(rep, Path(cfg.out) / "c0.json")
    return rep


def _rng(cfg, *stream):
    return np.random.default_rng([cfg.seed, *stream])


def cmd_xprocess(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    cert = an.find_c0(p, cfg.c0_tol)
    esc = an.escape_probability_mc(p, cfg.x0_over_D, cfg.n_over_D, cfg.mc_replicas, _rng(cfg, 101), cert.c0)
    log_x = an.sample_log_x(p, [cfg.horizon], cfg.mc_replicas, _rng(cfg, 102))[0]
    slope = float(log_x.mean() / cfg.horizon)
    sm = an.check_supermartingale(p, cert.c0, cfg.mc_replicas, cfg.horizon, _rng(cfg, 103))
    rep = {
        "config": cfg.echo(),
        "certificate": cert.as_dict(),
        "escape": esc.as_dict(),
        "escape_ok": esc.p_hat >= esc.bound - 3 * esc.sigma,
        "drift": {
            "measured": slope,
            "expected": an.log_drift(p),
            "se": float(log_x.std(ddof=1) / math.sqrt(cfg.mc_replicas) / cfg.horizon),
            "relative_error": abs(slope / an.log_drift(p) - 1.0),
        },
        "supermartingale": sm.as_dict(),
    }
    rep["passed"] = bool(rep["escape_ok"] and sm.non_increasing and rep["drift"]["relative_error"] < 0.02)
    if cfg.out:
        dump_json(rep, Path(cfg.out) / "xprocess.json")
    return rep


# -- mean field -------------------------------------------------------------------


def escalation_report(theta: float, mu_plus: float, c0_profile=0.5, epsilon=0.25,
                      das=(0.025, 0.0125, 0.00625), n_samples: int = 1001) -> dict:
    """Exact interval check plus the discretised repulsion integral at
    ``c_plus`` for the piecewise-constant profile, at several resolutions.

    ``C`` is the largest observed ``(bound - discrete) / da`` (zero when the
    discrete value never falls below the bound).
    """
    w = mf.escalation_witness(mu_plus, c0_profile, epsilon)
    c_plus = float(w.c_plus)
    exact = float(mf.exact_repulsion_integral_on_profile(theta, mu_plus, c0_profile, epsilon, w.c_plus))
    bound = float(w.rate_bound)
    rows = []
    A = max(2.0, math.ceil(c_plus + 1.0))
    for da in das:
        g = mf.escalation_profile(theta, mu_plus, c0_profile, epsilon, A=A, da=da)
        val = mf.repulsion_at(g, c_plus)
        rows.append({"da": da, "discrete": val, "shortfall_over_da": max(0.0, (bound - val) / da)})
    C = max(r["shortfall_over_da"] for r in rows)
    ok_intervals = mf.check_escalation_intervals(theta, mu_plus, c0_profile, epsilon, n_samples)
    return {
        "witness": w.as_dict(),
        "intervals_ok": ok_intervals,
        "exact_integral": exact,
        "rate_bound": bound,
        "resolutions": rows,
        "C": C,
        "integral_ok": all(r["discrete"] >= bound - C * r["da"] for r in rows) and exact >= bound,
    }


def cmd_meanfield(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    run = mf.run_meanfield(p.theta, p.mu_plus, cfg.A, cfg.da, cfg.dt, cfg.t_max)
    rep = {"config": cfg.echo(), "run": run.summary()}
    rep["support_exceeds_1_plus_theta_mu"] = run.support_radius[-1] > 1.0 + p.theta * p.mu_plus
    if p.mu_plus > 0:
        rep["escalation"] = escalation_report(p.theta, p.mu_plus, p.theta / 2, 0.5 - p.theta / 4)
    if cfg.out:
        out = Path(cfg.out)
        run.write_csv(out / "meanfield.csv")
        dump_json(rep, out / "meanfield.json")
        if cfg.svg:
            from .plotting import plot_density

            plot_density(run.final, out / "density.svg")
    return rep


# -- lemma oracle suite -------------------------------------------------------------


def _entry(passed, samples, margin, **extra):
    return {"passed": bool(passed), "samples": int(samples), "worst_margin": float(margin), **extra}


def verify_interaction(n: int, rng) -> dict:
    """Random opinions and parameters; pair sum and branch multiplier errors
    are measured relative to ``|a| + |b|``."""
    theta = rng.uniform(1e-3, 2.0, n)
    mm = rng.uniform(1e-3, 0.5, n)
    mp = rng.uniform(0.0, 0.5, n)
    scale = 10.0 ** rng.uniform(-3, 3, n)
    a = rng.uniform(-1, 1, n) * scale
    b = rng.uniform(-1, 1, n) * scale
    na, nb, att = interact_array(a, b, theta, mm, mp)
    s = np.abs(a) + np.abs(b)
    sum_err = np.abs((na + nb) - (a + b)) / s
    factor = np.where(att, 1.0 - 2.0 * mm, 1.0 + 2.0 * mp)
    mult_err = np.abs(np.abs(na - nb) - factor * np.abs(a - b)) / s
    worst = float(max(sum_err.max(), mult_err.max()))
    return _entry(worst <= 1e-12, n, 1e-12 - worst,
                  worst_sum_error=float(sum_err.max()), worst_multiplier_error=float(mult_err.max()),
                  attraction_fraction=float(att.mean()))


def verify_initial_gap(theta: float, n: int, rng) -> dict:
    est = an.initial_gap_event_mc(theta, n, rng)
    margin = est.p_hat - (est.bound - 3 * est.sigma)
    return _entry(margin >= 0, n, margin, estimate=est.as_dict())


def verify_lemma_D(params: ModelParams, n: int, rng) -> dict:
    g = params.D * (1.0 + 10.0 ** rng.uniform(-9, 2, n))
    ok = an.check_lemma_D(g, params)
    margin = float(((1 - params.rho_minus) * g - params.mu_minus * params.theta).min())
    at_D = an.check_lemma_D(params.D, params)
    return _entry(ok.all() and not at_D, n, margin, equality_case_false=not at_D)


def align_grid(n_side: int = 100):
    """``n_side**3`` points: ``b`` on a line, ``a - b`` and ``b - c`` on
    log-spaced grids over six decades."""
    bs = np.linspace(-5.0, 5.0, n_side)
    gaps = np.geomspace(1e-3, 1e3, n_side)
    B, U, V = np.meshgrid(bs, gaps, gaps, indexing="ij")
    return (B + U).ravel(), B.ravel(), (B - V).ravel()


def verify_align(mu_values=(0.05, 0.1, 0.25, 0.5), n_side: int = 100) -> dict:
    a, b, c = align_grid(n_side)
    worst = math.inf
    worst_eq = 0.0
    per_mu = {}
    for mu in mu_values:
        rho_minus = (1 + 2 * mu) / (1 + 3 * mu)
        _, _, ratio = an.align_transform(a, b, c, mu)
        m = float((ratio - rho_minus).min())
        # locus where both candidate gaps coincide: the ratio is exactly rho_minus
        v = np.geomspace(1e-3, 1e3, n_side)
        b0 = np.linspace(-5, 5, n_side)
        B, V = np.meshgrid(b0, v, indexing="ij")
        _, _, r_eq = an.align_transform(B + (1 + 3 * mu) * V, B, B - V, mu)
        e = float(np.abs(r_eq - rho_minus).max())
        per_mu[str(mu)] = {"min_ratio_minus_rho": m, "locus_max_error": e}
        worst = min(worst, m)
        worst_eq = max(worst_eq, e)
    passed = worst >= -1e-12 and worst_eq <= 1e-9
    return _entry(passed, a.size * len(mu_values), worst, locus_max_error=worst_eq, per_mu=per_mu)


def verify_control_gap(params: ModelParams, n_per_case: int, rng) -> dict:
    cases = {}
    worst = math.inf
    total_fail = 0
    for idx, case in enumerate(an.CONTROL_GAP_CASES):
        x, side = an.control_gap_instances(case, params, n_per_case, rng)
        ok = an.check_control_gap(x, side, params)
        after = an.control_gap_after(x, side, params).max(axis=0)
        before = np.abs(x[2] - x[1])
        m = float((after / before - params.rho_minus).min())
        labels = an.classify_control_gap(x, side, params)
        fails = int((~ok).sum())
        total_fail += fails
        worst = min(worst, m)
        cases[case] = {"failures": fails, "min_ratio_minus_rho": m,
                       "label_agreement": float((labels == idx).mean())}
    return _entry(total_fail == 0, n_per_case * 4, worst, cases=cases)


def verify_supermartingale(mu_values, theta, mu_minus, replicas, horizon, seed) -> dict:
    per_mu = {}
    passed = True
    worst = math.inf
    for i, mu in enumerate(mu_values):
        p = validate_params(theta, mu_minus, mu)
        cert = an.find_c0(p)
        rep = an.check_supermartingale(p, cert.c0, replicas, horizon, np.random.default_rng([seed, 7, i]))
        ok = cert.phi_value < 0 and rep.one_jump_error <= 1e-12 and rep.non_increasing
        passed &= ok
        worst = min(worst, 3.0 - rep.worst_increase_z)
        per_mu[str(mu)] = {
            "c0": cert.c0, "phi_c0": cert.phi_value, "one_jump_error": rep.one_jump_error,
            "worst_increase_z": rep.worst_increase_z, "final_mean_y": rep.mean_y[-1], "passed": bool(ok),
        }
    return _entry(passed, replicas * len(mu_values), worst, per_mu=per_mu)


def verify_poisson_clocks(K: int, draws: int, rng, chunk: int = 1 << 22) -> dict:
    """Five independent Poisson(1) counts: the centre equals ``K`` and the four
    neighbours are zero."""
    hits = 0
    left = draws
    while left:
        n = min(chunk, left)
        I = rng.poisson(1.0, size=(5, n))
        hits += int(np.count_nonzero((I[0] == K) & (I[1:] == 0).all(axis=0)))
        left -= n
    p = math.exp(-5.0) / math.factorial(K)
    est = an.binomial_estimate(hits, draws, bound=p)
    sd = math.sqrt(p * (1 - p) / draws)
    z = (est.p_hat - p) / sd
    return _entry(abs(z) <= 3, draws, 3 - abs(z), estimate=est.as_dict(), z=z)


def cmd_verify(cfg: ExperimentConfig, sizes: dict | None = None) -> dict:
    """Run every lemma oracle at the given sample sizes (defaults: full)."""
    s = {
        "interaction": 1_000_000, "initial_gap": 10_000_000, "lemma_D": 100_000,
        "align_side": 100, "control_gap": 100_000, "sm_replicas": 100_000,
        "sm_horizon": 50.0, "escape": 100_000, "drift": 100_000, "poisson": 10_000_000,
    }
    s.update(sizes or {})
    p = cfg.params
    p.require_repulsion()
    rng = lambda k: np.random.default_rng([cfg.seed, k])  # noqa: E731
    lemmas = {}
    lemmas["interaction"] = verify_interaction(s["interaction"], rng(1))
    lemmas["initial_gap"] = verify_initial_gap(p.theta, s["initial_gap"], rng(2))
    lemmas["lemma_D"] = verify_lemma_D(p, s["lemma_D"], rng(3))
    lemmas["align"] = verify_align(n_side=s["align_side"])
    lemmas["control_gap"] = verify_control_gap(p, s["control_gap"], rng(4))
    fi = forced_increase(p)
    lemmas["increase_gap"] = _entry(fi["passed"], 1, fi["final_gap"] - 2 * p.D,
                                    final_gap=fi["final_gap"], two_D=2 * p.D, K=fi["K"])
    lemmas["poisson_clocks"] = verify_poisson_clocks(p.K, s["poisson"], rng(5))
    lemmas["supermartingale"] = verify_supermartingale(
        (0.01, 0.1, 0.25, 0.5), p.theta, p.mu_minus, s["sm_replicas"], s["sm_horizon"], cfg.seed)
    cert = an.find_c0(p)
    esc = an.escape_probability_mc(p, cfg.x0_over_D, cfg.n_over_D, s["escape"], rng(6), cert.c0)
    m = esc.p_hat - (esc.bound - 3 * esc.sigma)
    lemmas["optional_stopping"] = _entry(m >= 0, s["escape"], m, estimate=esc.as_dict())
    log_x = an.sample_log_x(p, [cfg.horizon], s["drift"], rng(8))[0]
    rel = abs(log_x.mean() / cfg.horizon / an.log_drift(p) - 1.0)
    lemmas["drift"] = _entry(rel < 0.02, s["drift"], 0.02 - rel,
                             measured=float(log_x.mean() / cfg.horizon), expected=an.log_drift(p))
    log_lb = an.theorem_lower_bound(p, cert, log=True)
    lb = math.exp(log_lb)
    lemmas["theorem_bound"] = _entry(math.isfinite(log_lb), 1, lb, value=lb, log_value=log_lb)
    esc_mf = escalation_report(p.theta, p.mu_plus, p.theta / 2, 0.5 - p.theta / 4)
    lemmas["escalation"] = _entry(esc_mf["intervals_ok"] and esc_mf["integral_ok"], 1,
                                  min(r["discrete"] for r in esc_mf["resolutions"]) - esc_mf["rate_bound"],
                                  **esc_mf)
    rep = {
        "config": cfg.echo(),
        "sizes": s,
        "lemmas": lemmas,
        "passed": all(v["passed"] for v in lemmas.values()),
    }
    if cfg.out:
        dump_json(rep, Path(cfg.out) / "verify.json")
    return rep
