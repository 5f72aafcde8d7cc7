"""Explicit Euler integration of the mean-field density equation (with
``mu_minus = 1/2``), and exact checks of the interval algebra behind the
spreading of its support.

The right-hand side at opinion ``a`` is

    int_{|b| <= theta/2} u(a+b) u(a-b) db
  + int_{|b| > theta*mu_plus} u(a+b) u(a+b+b/mu_plus) db
  - u(a).

The ``b`` grid coincides with the opinion grid, so ``u(a + b)`` is read
directly; ``u(a + b + b/mu_plus)`` is linearly interpolated. Density off the
grid counts as zero.
"""
from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from numba import njit

log = logging.getLogger(__name__)


class MeanFieldAbort(RuntimeError):
    pass


@dataclass
class DensityGrid:
    values: np.ndarray
    A: float
    da: float
    theta: float
    mu_plus: float
    time: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        n = int(round(2 * self.A / self.da)) + 1
        if self.A <= 1:
            raise ValueError("A must exceed 1")
        if not math.isclose((n - 1) * self.da, 2 * self.A, rel_tol=1e-9):
            raise ValueError("A must be a multiple of da")
        if self.values.shape != (n,):
            raise ValueError(f"expected {n} values, got {self.values.shape}")
        if np.any(self.values < 0):
            raise ValueError("density must be nonnegative")

    @property
    def a(self) -> np.ndarray:
        n = self.values.size
        return (np.arange(n) - (n - 1) // 2) * self.da

    @property
    def half(self) -> int:
        return (self.values.size - 1) // 2

    def mass(self, lo=-np.inf, hi=np.inf) -> float:
        a = self.a
        u = np.where((a >= lo - 1e-12) & (a <= hi + 1e-12), self.values, 0.0)
        return float(np.trapezoid(u, dx=self.da))

    def at(self, x: float) -> float:
        return float(np.interp(x, self.a, self.values, left=0.0, right=0.0))

    def support_radius(self, delta: float = 1e-3) -> float:
        """Largest ``|a|`` where ``u`` exceeds ``delta`` times its maximum."""
        m = self.values.max()
        if m <= 0:
            return 0.0
        idx = np.flatnonzero(self.values > delta * m)
        return float(np.abs(self.a[idx]).max())

    def copy(self) -> "DensityGrid":
        return DensityGrid(self.values.copy(), self.A, self.da, self.theta, self.mu_plus, self.time)


def uniform_grid(theta: float, mu_plus: float, A: float = 8.0, da: float = 0.02) -> DensityGrid:
    """Density ``1/2`` on ``[-1, 1]``, zero elsewhere."""
    n = int(round(2 * A / da)) + 1
    a = (np.arange(n) - (n - 1) // 2) * da
    u = np.where(np.abs(a) <= 1.0 + 1e-12, 0.5, 0.0)
    return DensityGrid(u, A, da, theta, mu_plus)


def _trap_weights(k: np.ndarray, da: float) -> np.ndarray:
    """Trapezoid weights over a run of consecutive integer offsets ``k``."""
    w = np.full(k.size, da)
    if k.size:
        w[0] = w[-1] = da / 2
    return w


@dataclass
class _Stencil:
    """Precomputed gather indices for one grid geometry."""

    att_k: np.ndarray
    att_w: np.ndarray
    rep_k: np.ndarray
    rep_w: np.ndarray
    rep_lo: np.ndarray  # (n, m) left interpolation index, -1 when off-grid
    rep_frac: np.ndarray


_STENCILS: dict = {}


def _stencil(n: int, da: float, theta: float, mu_plus: float) -> _Stencil:
    key = (n, da, theta, mu_plus)
    if key in _STENCILS:
        return _STENCILS[key]
    m = int(math.floor(theta / 2 / da + 1e-9))
    att_k = np.arange(-m, m + 1)
    att_w = _trap_weights(att_k, da)
    if mu_plus > 0:
        k0 = int(math.floor(theta * mu_plus / da + 1e-9)) + 1  # first |k| with |b| > theta*mu_plus
        # beyond this the far opinion a + b + b/mu_plus is off the grid for every a
        kmax = int(math.ceil((n - 1) / (1.0 + 1.0 / mu_plus)))
        pos = np.arange(k0, kmax + 1)
        w_pos = _trap_weights(pos, da)
        rep_k = np.concatenate([-pos[::-1], pos])
        rep_w = np.concatenate([w_pos[::-1], w_pos])
        i = np.arange(n)[:, None]
        # grid coordinate of a_i + b + b/mu_plus
        s = i + rep_k[None, :] * (1.0 + 1.0 / mu_plus)
        lo = np.floor(s + 1e-12).astype(np.int64)
        frac = np.clip(s - lo, 0.0, 1.0)
        frac[np.abs(frac) < 1e-12] = 0.0
        off = (lo < 0) | (lo > n - 1) | ((lo == n - 1) & (frac > 0))
        lo[off] = -1
        st = _Stencil(att_k, att_w, rep_k, rep_w, lo, frac)
    else:
        st = _Stencil(att_k, att_w, np.empty(0, np.int64), np.empty(0), np.empty((n, 0), np.int64), np.empty((n, 0)))
    _STENCILS[key] = st
    return st


def _shifted(u: np.ndarray, k: np.ndarray) -> np.ndarray:
    """Matrix ``U[i, j] = u[i + k[j]]`` with zeros off the grid."""
    n = u.size
    idx = np.arange(n)[:, None] + k[None, :]
    ok = (idx >= 0) & (idx < n)
    return np.where(ok, u[np.clip(idx, 0, n - 1)], 0.0)


def attraction_integral(grid: DensityGrid) -> np.ndarray:
    st = _stencil(grid.values.size, grid.da, grid.theta, grid.mu_plus)
    u = grid.values
    return (_shifted(u, st.att_k) * _shifted(u, -st.att_k)) @ st.att_w


def repulsion_integral(grid: DensityGrid) -> np.ndarray:
    st = _stencil(grid.values.size, grid.da, grid.theta, grid.mu_plus)
    if st.rep_k.size == 0:
        return np.zeros_like(grid.values)
    u = grid.values
    up = np.append(u, 0.0)  # index n is the off-grid zero
    lo = np.where(st.rep_lo < 0, u.size, st.rep_lo)
    hi = np.where(st.rep_lo < 0, u.size, np.minimum(st.rep_lo + 1, u.size))
    far = (1.0 - st.rep_frac) * up[lo] + st.rep_frac * up[hi]
    return (_shifted(u, st.rep_k) * far) @ st.rep_w


@njit(cache=True)
def _rhs_kernel(u, att_k, att_w, rep_k, rep_w, rep_lo, rep_frac):
    n = u.shape[0]
    out = np.empty(n)
    for i in range(n):
        acc = 0.0
        for j in range(att_k.shape[0]):
            p = i + att_k[j]
            q = i - att_k[j]
            if 0 <= p < n and 0 <= q < n:
                acc += att_w[j] * u[p] * u[q]
        for j in range(rep_k.shape[0]):
            p = i + rep_k[j]
            lo = rep_lo[i, j]
            if p < 0 or p >= n or lo < 0:
                continue
            f = rep_frac[i, j]
            far = (1.0 - f) * u[lo]
            if f > 0.0:
                far += f * u[lo + 1]
            acc += rep_w[j] * u[p] * far
        out[i] = acc - u[i]
    return out


def rhs(grid: DensityGrid) -> np.ndarray:
    """Time derivative of the density at every grid point.

    Same quadrature as ``attraction_integral + repulsion_integral - u``,
    compiled.
    """
    st = _stencil(grid.values.size, grid.da, grid.theta, grid.mu_plus)
    return _rhs_kernel(grid.values, st.att_k, st.att_w, st.rep_k, st.rep_w, st.rep_lo, st.rep_frac)


@dataclass
class StepInfo:
    clipped_mass: float
    max_abs_rhs: float


def step(grid: DensityGrid, dt: float, info: StepInfo | None = None) -> DensityGrid:
    """One explicit Euler step, clipping negative values to zero (in place)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    du = rhs(grid)
    new = grid.values + dt * du
    if not np.all(np.isfinite(new)):
        raise MeanFieldAbort(f"non-finite density at t={grid.time + dt}")
    neg = new < 0
    if info is not None:
        info.clipped_mass = float(-new[neg].sum() * grid.da)
        info.max_abs_rhs = float(np.abs(du).max())
    new[neg] = 0.0
    grid.values = new
    grid.time += dt
    return grid


# -- interval algebra ---------------------------------------------------------


@dataclass(frozen=True)
class EscalationWitness:
    c0_profile: Fraction
    epsilon: Fraction
    mu_plus: Fraction
    I_eps: tuple  # ((lo, hi), (lo, hi))
    J_eps: tuple
    c_plus: Fraction
    rate_bound: Fraction

    def as_dict(self) -> dict:
        f = float
        return {
            "c0_profile": f(self.c0_profile),
            "epsilon": f(self.epsilon),
            "I_eps": [[f(x) for x in iv] for iv in self.I_eps],
            "J_eps": [f(x) for x in self.J_eps],
            "c_plus": f(self.c_plus),
            "rate_bound": f(self.rate_bound),
        }


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def escalation_witness(mu_plus, c0_profile, epsilon) -> EscalationWitness:
    """Exact (rational) intervals for a profile that is at least ``epsilon`` on
    ``[-c0 - 2eps, -c0]`` and ``[c0, c0 + 2eps]``. Floats are converted
    exactly; pass strings or Fractions for decimal values like ``"0.1"``."""
    mu, c0, eps = _frac(mu_plus), _frac(c0_profile), _frac(epsilon)
    if mu <= 0:
        raise ValueError("mu_plus must be positive")
    I = ((-c0 - 2 * eps, -c0), (c0, c0 + 2 * eps))
    centre = -2 * mu * (c0 + eps)
    half = eps / (1 + 1 / mu)
    return EscalationWitness(
        c0, eps, mu, I, (centre - half, centre + half),
        (2 * mu + 1) * (c0 + eps), 2 * eps ** 3 / (1 + 1 / mu),
    )


def _in_union(x, intervals) -> bool:
    return any(lo <= x <= hi for lo, hi in intervals)


def check_escalation_intervals(theta, mu_plus, c0_profile, epsilon, n_samples: int = 101) -> bool:
    """For ``n_samples`` evenly spaced ``b`` in ``J_eps`` (endpoints included),
    check exactly that ``c_plus + b`` and ``c_plus + b + b/mu_plus`` fall in
    ``I_eps``."""
    c0, eps = _frac(c0_profile), _frac(epsilon)
    if c0 < _frac(theta) / 2:
        raise ValueError("c0_profile must be at least theta/2")
    if eps < 0:
        raise ValueError("epsilon must be nonnegative")
    if eps == 0:
        warnings.warn("epsilon = 0: the interval condition holds vacuously", stacklevel=2)
        return True
    w = escalation_witness(mu_plus, c0, eps)
    lo, hi = w.J_eps
    n = max(2, int(n_samples))
    for i in range(n):
        b = lo + (hi - lo) * Fraction(i, n - 1)
        if not (_in_union(w.c_plus + b, w.I_eps) and _in_union(w.c_plus + b + b / w.mu_plus, w.I_eps)):
            return False
    return True


def escalation_profile(theta, mu_plus, c0_profile, epsilon, A: float, da: float) -> DensityGrid:
    """Density equal to ``epsilon`` on ``I_eps`` and zero elsewhere."""
    w = escalation_witness(mu_plus, c0_profile, epsilon)
    n = int(round(2 * A / da)) + 1
    a = (np.arange(n) - (n - 1) // 2) * da
    u = np.zeros(n)
    for lo, hi in w.I_eps:
        u[(a >= float(lo) - 1e-12) & (a <= float(hi) + 1e-12)] = float(epsilon)
    return DensityGrid(u, A, da, float(theta), float(mu_plus))


def exact_repulsion_integral_on_profile(theta, mu_plus, c0_profile, epsilon, a) -> Fraction:
    """Repulsion integral at opinion ``a`` for the piecewise-constant profile
    of :func:`escalation_profile`, by exact interval intersection.

    The integrand is ``eps**2`` exactly where ``|b| > theta*mu_plus``,
    ``a + b`` in ``I_eps`` and ``a + b(1 + 1/mu_plus)`` in ``I_eps``.
    """
    w = escalation_witness(mu_plus, c0_profile, epsilon)
    a = _frac(a)
    s = 1 + 1 / w.mu_plus
    cut = _frac(theta) * w.mu_plus
    total = Fraction(0)
    for lo1, hi1 in w.I_eps:
        for lo2, hi2 in w.I_eps:
            lo = max(lo1 - a, (lo2 - a) / s)
            hi = min(hi1 - a, (hi2 - a) / s)
            if hi <= lo:
                continue
            for side_lo, side_hi in ((lo, min(hi, -cut)), (max(lo, cut), hi)):
                if side_hi > side_lo:
                    total += side_hi - side_lo
    return total * w.epsilon ** 2


def repulsion_at(grid: DensityGrid, a: float) -> float:
    """Discretised repulsion integral at any opinion ``a``.

    Uses the same ``b`` nodes and weights as the grid stencil with both
    factors linearly interpolated, so at grid points it agrees with
    :func:`repulsion_integral`.
    """
    if grid.mu_plus <= 0:
        return 0.0
    st = _stencil(grid.values.size, grid.da, grid.theta, grid.mu_plus)
    b = st.rep_k * grid.da
    near = np.interp(a + b, grid.a, grid.values, left=0.0, right=0.0)
    far = np.interp(a + b * (1.0 + 1.0 / grid.mu_plus), grid.a, grid.values, left=0.0, right=0.0)
    return float(np.dot(st.rep_w, near * far))


# -- full runs ------------------------------------------------------------------


@dataclass
class MeanFieldRun:
    theta: float
    mu_plus: float
    c_plus: float
    t: list = field(default_factory=list)
    support_radius: list = field(default_factory=list)
    mass_total: list = field(default_factory=list)
    mass_unit: list = field(default_factory=list)
    u_at_c_plus: list = field(default_factory=list)
    max_clipped_mass: float = 0.0
    max_asymmetry: float = 0.0
    boundary_reached: bool = False
    final: DensityGrid | None = None
    snapshots: dict = field(default_factory=dict)

    @property
    def support_grew(self) -> bool:
        return self.support_radius[-1] > 1.0 + 1e-9

    def summary(self) -> dict:
        return {
            "theta": self.theta,
            "mu_plus": self.mu_plus,
            "c_plus": self.c_plus,
            "t_final": self.t[-1],
            "support_radius_initial": self.support_radius[0],
            "support_radius_final": self.support_radius[-1],
            "support_grew_beyond_1": self.support_grew,
            "mass_total_final": self.mass_total[-1],
            "mass_unit_final": self.mass_unit[-1],
            "max_clipped_mass_per_step": self.max_clipped_mass,
            "max_asymmetry": self.max_asymmetry,
            "boundary_reached": self.boundary_reached,
        }

    def write_csv(self, path):
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "support_radius", "mass_total", "mass_in_unit_interval", "u_at_c_plus"])
            for row in zip(self.t, self.support_radius, self.mass_total, self.mass_unit, self.u_at_c_plus):
                w.writerow([repr(float(v)) for v in row])


def run_meanfield(theta: float, mu_plus: float, A: float = 8.0, da: float = 0.02,
                  dt: float = 0.005, t_max: float = 20.0, record_every: float = 0.5,
                  delta: float = 1e-3, snapshot_times=()) -> MeanFieldRun:
    """Integrate from the uniform profile on ``[-1, 1]``.

    ``c_plus`` is the first escalation point ``(2 mu_plus + 1)(c0 + eps)``
    with ``c0 = theta/2`` and ``eps = 1/2 - theta/4``. ``snapshot_times``
    requests copies of the full profile (stored in ``run.snapshots``).
    """
    grid = uniform_grid(theta, mu_plus, A, da)
    c0, eps = theta / 2, 0.5 - theta / 4
    c_plus = (2 * mu_plus + 1) * (c0 + eps)
    run = MeanFieldRun(theta, mu_plus, c_plus)
    pending = sorted(snapshot_times)
    n_steps = int(round(t_max / dt))
    rec = max(1, int(round(record_every / dt)))
    info = StepInfo(0.0, 0.0)
    edge_band = max(3, int(round(0.1 / da)))

    def record():
        run.t.append(grid.time)
        run.support_radius.append(grid.support_radius(delta))
        run.mass_total.append(grid.mass())
        run.mass_unit.append(grid.mass(-1.0, 1.0))
        run.u_at_c_plus.append(grid.at(c_plus))
        run.max_asymmetry = max(run.max_asymmetry, float(np.abs(grid.values - grid.values[::-1]).max()))

    record()
    for s in range(1, n_steps + 1):
        step(grid, dt, info)
        run.max_clipped_mass = max(run.max_clipped_mass, info.clipped_mass)
        if not run.boundary_reached and max(grid.values[:edge_band].max(), grid.values[-edge_band:].max()) > delta * grid.values.max():
            run.boundary_reached = True
            log.warning("density reached the truncation boundary A=%s at t=%.3f", A, grid.time)
        while pending and grid.time >= pending[0] - dt / 2:
            run.snapshots[pending.pop(0)] = grid.copy()
        if s % rec == 0 or s == n_steps:
            record()
    run.final = grid
    return run
