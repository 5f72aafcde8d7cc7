"""Numerical checks of the divergence argument.

Covers the scalar jump process that the tracked gap dominates (multiplied by
``rho_minus`` at rate 2 and by ``rho_plus`` at rate 1), the constant ``c0``
that makes ``c0 ** log(X)`` a supermartingale, the resulting escape bound
``1 - c0 ** log 2``, and Monte-Carlo / exhaustive oracles for each lemma.

All logarithms are natural.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize
from statsmodels.stats.proportion import proportion_confint

from .model import ModelParams, ParameterError, interact_array

LOG2 = math.log(2.0)


def _log_rates(params: ModelParams) -> tuple[float, float]:
    return math.log(params.rho_minus), math.log(params.rho_plus)


def log_drift(params: ModelParams) -> float:
    """Growth rate of ``E[log X_t]``: ``2 log rho_minus + log rho_plus``."""
    lm, lp = _log_rates(params)
    return 2.0 * lm + lp


# -- supermartingale certificate ---------------------------------------------


def phi(c, params: ModelParams):
    """``2 c**log(rho_minus) + c**log(rho_plus) - 3``."""
    params.require_repulsion()
    c = np.asarray(c, dtype=float)
    if np.any(c <= 0):
        raise ValueError("phi is defined for c > 0 only")
    lm, lp = _log_rates(params)
    lc = np.log(c)
    out = 2.0 * np.exp(lc * lm) + np.exp(lc * lp) - 3.0
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Certificate:
    c_star: float  # root of phi in (0, 1)
    c0: float
    phi_value: float
    escape_bound: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def find_c0(params: ModelParams, tol: float = 1e-9) -> Certificate:
    """Smallest admissible ``c0`` (up to ``tol``), which maximises the bound.

    ``phi`` is convex in ``s = log c`` with ``phi(1) = 0`` and positive slope
    there, so it has exactly one other root ``c*`` in (0, 1) and is negative
    on ``(c*, 1)``. The root is bracketed between a point where ``phi > 0``
    and the minimiser of ``phi`` in ``s``, then refined by bisection.
    """
    params.require_repulsion()
    if tol <= 0:
        raise ValueError("tol must be positive")
    lm, lp = _log_rates(params)

    def f(s):
        return 2.0 * math.exp(s * lm) + math.exp(s * lp) - 3.0

    s_min = math.log(-lp / (2.0 * lm)) / (lm - lp)
    if not f(s_min) < 0:
        raise RuntimeError("phi has no negative region below c = 1")
    s_lo = 2.0 * s_min
    while f(s_lo) <= 0:
        s_lo *= 2.0
        if s_lo < -1e6:
            raise RuntimeError("could not bracket the root of phi")
    s_star = optimize.bisect(f, s_lo, s_min, xtol=1e-15, rtol=1e-15, maxiter=500)
    c_star = math.exp(s_star)
    c0 = c_star + tol
    if c0 >= 1.0:
        raise ValueError("tol too large: c0 must stay below 1")
    value = phi(c0, params)
    if not value < 0:
        raise RuntimeError(f"phi(c0) = {value} is not negative; increase tol")
    return Certificate(c_star, c0, value, escape_bound(c0))


def escape_bound(c0: float) -> float:
    return 1.0 - c0 ** LOG2


# -- the dominated jump process ----------------------------------------------


@dataclass
class XTrajectory:
    times: np.ndarray
    log_x: np.ndarray

    @property
    def x(self) -> np.ndarray:
        return np.exp(self.log_x)


def simulate_x(x0: float, params: ModelParams, t_max: float, rng=None) -> XTrajectory:
    """Jump chain with exponential(3) holding times; each jump multiplies by
    ``rho_minus`` w.p. 2/3 and by ``rho_plus`` w.p. 1/3. State kept in logs."""
    if x0 <= 0:
        raise ValueError("x0 must be positive")
    rng = np.random.default_rng(rng)
    lm, lp = _log_rates(params)
    times, steps = [0.0], [0.0]
    t = 0.0
    while True:
        t += rng.exponential(1.0 / 3.0)
        if t > t_max:
            break
        times.append(t)
        steps.append(lp if rng.random() < 1.0 / 3.0 else lm)
    return XTrajectory(np.array(times), math.log(x0) + np.cumsum(steps))


def sample_log_x(params: ModelParams, t_grid, replicas: int, rng=None, log_x0: float = 0.0) -> np.ndarray:
    """``log X`` at the times in ``t_grid`` for many independent replicas.

    Uses the counting form of the same process: on each interval the number of
    jumps is Poisson(3 dt) and the number of upward jumps among them is
    Binomial(n, 1/3). Returns an array ``(len(t_grid), replicas)``.
    """
    rng = np.random.default_rng(rng)
    lm, lp = _log_rates(params)
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t_grid) < 0) or (t_grid.size and t_grid[0] < 0):
        raise ValueError("t_grid must be nonnegative and nondecreasing")
    out = np.empty((t_grid.size, replicas))
    cur = np.full(replicas, float(log_x0))
    prev = 0.0
    for i, t in enumerate(t_grid):
        n = rng.poisson(3.0 * (t - prev), size=replicas)
        up = rng.binomial(n, 1.0 / 3.0)
        cur = cur + up * lp + (n - up) * lm
        out[i] = cur
        prev = t
    return out


@dataclass
class Estimate:
    successes: int
    trials: int
    p_hat: float
    sigma: float
    ci_low: float
    ci_high: float
    bound: float | None = None

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def binomial_estimate(successes: int, trials: int, alpha: float = 0.05, bound=None) -> Estimate:
    p = successes / trials
    lo, hi = proportion_confint(successes, trials, alpha=alpha, method="wilson")
    return Estimate(int(successes), int(trials), p, math.sqrt(p * (1 - p) / trials), float(lo), float(hi), bound)


def escape_probability_mc(params: ModelParams, x0_over_D: float, n_over_D: float,
                          replicas: int, rng=None, c0: float | None = None) -> Estimate:
    """Fraction of replicas reaching ``[N, inf)`` before ``(0, D]``.

    Only the embedded jump chain matters for the exit side, so holding times
    are not drawn.
    """
    params.require_repulsion()
    if not x0_over_D > 2.0:
        raise ValueError("the escape bound needs X0 > 2D")
    if n_over_D < x0_over_D:
        raise ValueError("N must be at least X0")
    rng = np.random.default_rng(rng)
    if c0 is None:
        c0 = find_c0(params).c0
    lm, lp = _log_rates(params)
    top = math.log(n_over_D)
    log_x = np.full(replicas, math.log(x0_over_D))
    escaped = np.zeros(replicas, dtype=bool)
    escaped[log_x >= top] = True
    active = np.flatnonzero(~escaped)
    while active.size:
        up = rng.random(active.size) < 1.0 / 3.0
        log_x[active] += np.where(up, lp, lm)
        v = log_x[active]
        hit_top = v >= top
        escaped[active[hit_top]] = True
        active = active[~hit_top & (v > 0.0)]
    return binomial_estimate(int(escaped.sum()), replicas, bound=escape_bound(c0))


@dataclass
class SupermartingaleReport:
    c0: float
    phi_value: float
    one_jump_expected_ratio: float
    one_jump_identity: float
    one_jump_error: float
    t_grid: list
    mean_y: list
    se_y: list
    worst_increase_z: float  # largest standardised increase between grid times
    non_increasing: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def one_jump_ratio(params: ModelParams, c0: float, x: float = 1.0) -> tuple[float, float]:
    """``E[Y'/Y]`` over a single jump, computed by averaging the two outcomes
    from an actual state ``x``, next to the closed form ``(phi(c0) + 3) / 3``."""
    lm, lp = _log_rates(params)
    lc = math.log(c0)
    y = math.exp(lc * math.log(x))
    y_down = math.exp(lc * (math.log(x) + lm))
    y_up = math.exp(lc * (math.log(x) + lp))
    direct = (2.0 * y_down / y + y_up / y) / 3.0
    return direct, (phi(c0, params) + 3.0) / 3.0


def check_supermartingale(params: ModelParams, c0: float, replicas: int, horizon: float,
                          rng=None, n_grid: int = 10, z: float = 3.0) -> SupermartingaleReport:
    """Monte-Carlo estimate of ``E[Y_t]`` (``Y = c0**log X``, ``X_0 = 1``) on a
    time grid, checked to be non-increasing up to ``z`` standard errors of the
    paired increments."""
    params.require_repulsion()
    value = phi(c0, params)
    if value > 0:
        raise ValueError(f"phi(c0) = {value} > 0: not a certificate")
    direct, closed = one_jump_ratio(params, c0, x=2.5)
    t_grid = np.linspace(0.0, horizon, n_grid + 1)
    log_x = sample_log_x(params, t_grid, replicas, rng)
    y = np.exp(math.log(c0) * log_x)
    mean = y.mean(axis=1)
    se = y.std(axis=1, ddof=1) / math.sqrt(replicas)
    worst = -math.inf
    for i in range(1, t_grid.size):
        d = y[i] - y[i - 1]
        sd = d.std(ddof=1) / math.sqrt(replicas)
        zi = d.mean() / sd if sd > 0 else (0.0 if d.mean() <= 0 else math.inf)
        worst = max(worst, zi)
    return SupermartingaleReport(
        c0=c0, phi_value=value,
        one_jump_expected_ratio=direct, one_jump_identity=closed,
        one_jump_error=abs(direct - closed),
        t_grid=t_grid.tolist(), mean_y=mean.tolist(), se_y=se.tolist(),
        worst_increase_z=float(worst), non_increasing=bool(worst <= z),
    )


# -- lemma oracles ------------------------------------------------------------


def lemma_initial_gap_bound(theta: float) -> float:
    if not 0 < theta < 2:
        raise ParameterError("theta must lie in (0, 2)")
    return (0.5 - theta / 4.0) ** 2 * (theta / 4.0) ** 2


def initial_gap_event_mc(theta: float, samples: int, rng=None, chunk: int = 1 << 22) -> Estimate:
    """Sample four i.i.d. uniform[-1, 1] opinions along three consecutive edges
    and count how often the middle gap exceeds ``theta`` while both outer gaps
    are below it."""
    rng = np.random.default_rng(rng)
    hits = 0
    left = samples
    while left > 0:
        n = min(chunk, left)
        x = rng.uniform(-1.0, 1.0, size=(4, n))
        g = np.abs(np.diff(x, axis=0))
        hits += int(np.count_nonzero((g[0] < theta) & (g[1] > theta) & (g[2] < theta)))
        left -= n
    return binomial_estimate(hits, samples, bound=lemma_initial_gap_bound(theta))


def check_lemma_D(g, params: ModelParams):
    """Whether ``g - mu_minus * theta > rho_minus * g``."""
    params.require_repulsion()
    res = np.asarray(g) - params.mu_minus * params.theta > params.rho_minus * np.asarray(g)
    return bool(res) if res.ndim == 0 else res


def align_transform(a, b, c, mu_plus):
    """Push ``b`` and ``c`` apart by ``mu_plus`` and return ``(b', c', ratio)``
    where ratio is ``max(|a - b'|, |b' - c'|) / |a - b|``. Works elementwise."""
    a, b, c = (np.asarray(v, dtype=float) for v in (a, b, c))
    if np.any(mu_plus <= 0):
        raise ValueError("mu_plus must be positive")
    if not (np.all(a > b) and np.all(b > c)):
        raise ValueError("align_transform needs a > b > c")
    bp = b - mu_plus * (c - b)
    cp = c - mu_plus * (b - c)
    ratio = np.maximum(np.abs(a - bp), np.abs(bp - cp)) / np.abs(a - b)
    if ratio.ndim == 0:
        return float(bp), float(cp), float(ratio)
    return bp, cp, ratio


def control_gap_after(x, side, params: ModelParams):
    """Gaps of the three edges around the middle edge after an interaction on
    its left (``side = -1``) or right (``side = +1``) neighbour.

    ``x`` holds four opinions, shape ``(4,)`` or ``(4, n)``, on consecutive
    sites; the middle edge joins ``x[1]`` and ``x[2]``.
    """
    x = np.array(x, dtype=float)
    side = np.broadcast_to(np.asarray(side), x.shape[1:])
    left = side < 0
    i = np.where(left, 0, 2)
    j = i + 1
    xi = np.take_along_axis(x, i[None], 0)[0]
    xj = np.take_along_axis(x, j[None], 0)[0]
    ni, nj, _ = interact_array(xi, xj, params.theta, params.mu_minus, params.mu_plus)
    np.put_along_axis(x, i[None], ni[None], 0)
    np.put_along_axis(x, j[None], nj[None], 0)
    return np.abs(np.diff(x, axis=0))


def check_control_gap(x, side, params: ModelParams, tol: float = 1e-12):
    """Whether the window maximum after the interaction is at least
    ``rho_minus`` times the middle gap before it (up to relative ``tol``).

    Requires the middle gap to exceed ``D``.
    """
    params.require_repulsion()
    x = np.asarray(x, dtype=float)
    g_before = np.abs(x[2] - x[1])
    if np.any(g_before <= params.D):
        raise ValueError("check_control_gap needs the middle gap to exceed D")
    g_after = control_gap_after(x, side, params)
    res = g_after.max(axis=0) >= params.rho_minus * g_before * (1.0 - tol)
    return bool(res) if np.ndim(res) == 0 else res


CONTROL_GAP_CASES = ("repulsion_up", "attraction_up", "attraction_down", "repulsion_down")


def control_gap_instances(case: str, params: ModelParams, n: int, rng=None, spread: float = 10.0):
    """Random four-site contexts for one of the four configurations of the
    far site ``c`` relative to the shared site ``b`` (with ``a > b``):

    ``repulsion_up``: ``c > b + theta``; ``attraction_up``: ``b <= c <= b + theta``;
    ``attraction_down``: ``b - theta <= c <= b``; ``repulsion_down``: ``c < b - theta``.

    The gap ``a - b`` is uniform on ``(D, spread * D)``, repulsive offsets are
    uniform up to ``spread * D`` beyond ``theta``. Each instance is then
    randomly mirrored (left/right) and reflected (sign), so both event sides
    are exercised. Returns ``(x, side)`` with ``x`` of shape ``(4, n)``.
    """
    params.require_repulsion()
    rng = np.random.default_rng(rng)
    th, D = params.theta, params.D
    b = rng.uniform(-spread * D, spread * D, n)
    a = b + D * (1.0 + rng.uniform(1e-9, spread - 1.0, n))
    u = rng.uniform(0.0, 1.0, n)
    if case == "repulsion_up":
        c = b + th + (u + 1e-12) * spread * D
    elif case == "attraction_up":
        c = b + u * th
    elif case == "attraction_down":
        c = b - u * th
    elif case == "repulsion_down":
        c = b - th - (u + 1e-12) * spread * D
    else:
        raise ValueError(f"unknown case {case!r}")
    # far-left site: anything
    z = rng.uniform(-spread * D, spread * D, n) + a
    x = np.stack([z, a, b, c])
    side = np.ones(n, dtype=int)
    mirror = rng.random(n) < 0.5
    x[:, mirror] = x[::-1, :][:, mirror]
    side[mirror] = -1
    flip = rng.random(n) < 0.5
    x[:, flip] *= -1.0
    return x, side


def classify_control_gap(x, side, params: ModelParams) -> np.ndarray:
    """Inverse of the construction in :func:`control_gap_instances`: map each
    context back to its case index (0..3)."""
    x = np.asarray(x, dtype=float)
    side = np.asarray(side)
    right = side > 0
    a = np.where(right, x[1], x[2])
    b = np.where(right, x[2], x[1])
    c = np.where(right, x[3], x[0])
    s = np.sign(a - b)
    d = s * (c - b)  # c - b in the frame where a > b
    th = params.theta
    return np.select([d > th, d >= 0, d >= -th], [0, 1, 2], 3)


def theorem_lower_bound(params: ModelParams, certificate: Certificate | None = None,
                        log: bool = False) -> float:
    """Product of the initial-gap bound, the Poisson-clock factor
    ``e**-5 / K!`` and the escape bound.

    Computed in logs since ``K!`` overflows for small ``mu_plus``; pass
    ``log=True`` to get the natural log when the value itself underflows.
    """
    params.require_repulsion()
    cert = certificate or find_c0(params)
    value = (
        math.log(lemma_initial_gap_bound(params.theta))
        - 5.0 - math.lgamma(params.K + 1)
        + math.log(cert.escape_bound)
    )
    return value if log else math.exp(value)
