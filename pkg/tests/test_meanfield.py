from fractions import Fraction

import numpy as np
import pytest

from deffuant_ar.meanfield import (
    DensityGrid,
    MeanFieldAbort,
    StepInfo,
    attraction_integral,
    check_escalation_intervals,
    escalation_profile,
    escalation_witness,
    exact_repulsion_integral_on_profile,
    repulsion_at,
    repulsion_integral,
    rhs,
    run_meanfield,
    step,
    uniform_grid,
)


def _grid(values, A, da, theta=0.4, mu_plus=0.25):
    return DensityGrid(np.asarray(values, float), A, da, theta, mu_plus)


def test_zero_density_is_fixed():
    g = _grid(np.zeros(801), 8.0, 0.02)
    assert np.all(rhs(g) == 0)
    step(g, 0.01)
    assert np.all(g.values == 0) and g.time == 0.01


def test_point_mass_toy_grid():
    # seven nodes at spacing 1/2; theta/2 < da so attraction keeps only b = 0
    # with trapezoid weight da/2; the far repulsion partner always leaves the grid
    u = np.zeros(7)
    u[3] = 2.0
    out = rhs(_grid(u, 1.5, 0.5))
    assert out == pytest.approx([0, 0, 0, 0.25 * 2 * 2 - 2, 0, 0, 0], abs=1e-15)


def test_repulsion_hand_quadrature():
    # nodes a = -2.5..2.5 step 0.5; at a = 0 the pair (b = 0.5, far = 0.5 + 2) hits
    # u(0.5) = u(2.5) = 1 with end-point weight 0.25
    u = np.zeros(11)
    u[6] = u[10] = 1.0
    g = _grid(u, 2.5, 0.5)
    assert repulsion_integral(g)[5] == pytest.approx(0.25, abs=1e-15)
    assert rhs(g)[5] == pytest.approx(0.25, abs=1e-15)


def test_compiled_rhs_matches_reference():
    rng = np.random.default_rng(0)
    g = _grid(rng.random(401), 4.0, 0.02, theta=1.0, mu_plus=0.25)
    ref = attraction_integral(g) + repulsion_integral(g) - g.values
    assert np.max(np.abs(rhs(g) - ref)) <= 1e-13


def test_repulsion_at_agrees_on_nodes():
    rng = np.random.default_rng(1)
    g = _grid(rng.random(401), 4.0, 0.02, theta=1.0, mu_plus=0.25)
    rep = repulsion_integral(g)
    for i in (150, 200, 263):
        assert repulsion_at(g, g.a[i]) == pytest.approx(rep[i], rel=1e-12, abs=1e-15)


def test_grid_validation():
    with pytest.raises(ValueError):
        _grid(np.zeros(10), 8.0, 0.02)
    with pytest.raises(ValueError):
        _grid(-np.ones(801), 8.0, 0.02)


def test_single_step_from_uniform_stays_finite():
    g = uniform_grid(1.0, 0.25, A=8.0, da=0.01)
    info = StepInfo(0.0, 0.0)
    step(g, 0.01, info)
    assert np.all(np.isfinite(g.values)) and np.all(g.values >= 0)
    assert info.clipped_mass < 1e-6


def test_non_finite_aborts():
    g = uniform_grid(1.0, 0.25, A=4.0, da=0.02)
    g.values[10] = np.inf
    with pytest.raises(MeanFieldAbort):
        step(g, 0.01)


def test_initial_profile_lower_bound():
    theta = 1.0
    g = uniform_grid(theta, 0.25)
    a = g.a
    band = (np.abs(a) >= theta / 2) & (np.abs(a) <= 1.0)
    assert np.all(g.values[band] >= 0.5 - theta / 4)
    # trapezoid over the jumps at +-1 adds half a cell of mass
    assert g.mass() == pytest.approx(1.0 + g.da / 2, abs=1e-12)


def test_symmetry_preserved():
    run = run_meanfield(1.0, 0.25, A=6.0, da=0.02, dt=0.005, t_max=3.0)
    assert run.max_asymmetry <= 1e-10


def test_classic_support_does_not_grow():
    run = run_meanfield(1.0, 0.0, A=4.0, da=0.02, dt=0.005, t_max=5.0)
    assert max(run.support_radius) <= 1.0 + 1e-9
    assert not run.support_grew


def test_refinement_converges():
    # u(., 1) on |a| <= 0.4, away from the jumps at +-1 and from +-theta/2
    def profile(da, dt):
        g = run_meanfield(1.0, 0.25, A=3.0, da=da, dt=dt, t_max=1.0).final
        keep = np.abs(g.a) <= 0.4 + 1e-9
        return g.a[keep], g.values[keep]

    a1, u1 = profile(0.04, 0.01)
    a2, u2 = profile(0.02, 0.005)
    a3, u3 = profile(0.01, 0.0025)
    e12 = np.max(np.abs(u1 - np.interp(a1, a2, u2)))
    e23 = np.max(np.abs(u2 - np.interp(a2, a3, u3)))
    # first order or better: halving the mesh at least halves the change
    assert e23 <= 0.05 * 0.02
    assert e23 <= e12 / 2


def test_escalation_intervals_canonical():
    w = escalation_witness(Fraction(1, 4), Fraction(1, 2), Fraction(1, 4))
    assert w.c_plus == Fraction(9, 8)
    assert w.J_eps == (Fraction(-17, 40), Fraction(-13, 40))
    assert w.rate_bound == Fraction(1, 160)
    assert check_escalation_intervals(1, "0.25", "0.5", "0.25")


def test_escalation_midpoint_example():
    w = escalation_witness(Fraction(1, 4), Fraction(1, 2), Fraction(1, 4))
    b = Fraction(-3, 8)
    assert w.c_plus + b == Fraction(3, 4)
    assert w.c_plus + b + b / w.mu_plus == Fraction(-3, 4)


def test_escalation_endpoints_inside():
    w = escalation_witness(Fraction(1, 4), Fraction(1, 2), Fraction(1, 4))
    (l1, h1), (l2, h2) = w.I_eps
    for b in w.J_eps:
        assert l2 <= w.c_plus + b <= h2
        assert l1 <= w.c_plus + b + b / w.mu_plus <= h1


@pytest.mark.parametrize("mu", ["0.05", "0.1", "0.5"])
def test_escalation_other_parameters(mu):
    assert check_escalation_intervals(1, mu, "0.5", "0.25", n_samples=51)


def test_escalation_epsilon_zero_warns():
    with pytest.warns(UserWarning):
        assert check_escalation_intervals(1, 0.25, 0.5, 0)


def test_escalation_profile_validation():
    with pytest.raises(ValueError):
        check_escalation_intervals(1, 0.25, 0.4, 0.25)


def test_exact_integral_equals_bound_at_c_plus():
    val = exact_repulsion_integral_on_profile(1, Fraction(1, 4), Fraction(1, 2), Fraction(1, 4), Fraction(9, 8))
    assert val == Fraction(1, 160)


@pytest.mark.parametrize("da", [0.025, 0.0125, 0.00625])
def test_discrete_integral_tracks_exact(da):
    g = escalation_profile(1.0, 0.25, 0.5, 0.25, A=4.0, da=da)
    disc = repulsion_at(g, 1.125)
    # measured discretisation constant is about 0.0625
    assert abs(disc - 0.00625) <= 0.1 * da
    assert disc >= 0.00625 - 0.1 * da


def test_run_outputs(tmp_path):
    run = run_meanfield(1.0, 0.25, A=4.0, da=0.04, dt=0.01, t_max=1.0, snapshot_times=(0.5,))
    assert 0.5 in run.snapshots
    run.write_csv(tmp_path / "mf.csv")
    lines = (tmp_path / "mf.csv").read_text().splitlines()
    assert lines[0] == "t,support_radius,mass_total,mass_in_unit_interval,u_at_c_plus"
    assert len(lines) == len(run.t) + 1
    s = run.summary()
    assert s["t_final"] == pytest.approx(1.0)
    assert s["max_clipped_mass_per_step"] < 1e-6
