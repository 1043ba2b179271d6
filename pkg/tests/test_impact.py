import numpy as np
import pytest

from impactlab import impact as imp
from impactlab import stationary as st
from impactlab.errors import CflError


def test_impact_zero_at_zero(fig_params):
    c = imp.impact_curve(fig_params, 0.2, [0.0, 0.5], n=200)
    assert c.impact[0] == 0.0
    assert c.impact[1] > 0.0


def test_impact_nondecreasing_concave(fig_params):
    q = np.linspace(0.0, 2.0, 21)
    c = imp.impact_curve(fig_params, 0.2, q, n=300)
    d1 = np.diff(c.impact)
    assert np.all(d1 > 0)
    d2 = np.diff(c.impact, 2)
    assert np.all(d2 <= 1e-4 * np.max(np.abs(c.impact)))


def test_expected_ceiling_terminal_limit(fig_params):
    # a vanishing horizon reproduces the terminal data: 0 at 0, 1 above
    d = imp.solve_expected_ceiling(fig_params, 0.2, Q=1e-6, n=200)
    assert d.values[0] == pytest.approx(0.0, abs=0.05)
    interior = d.values[20:-1]
    assert np.allclose(interior, 1.0, atol=0.05)


def test_expected_ceiling_quasi_periodic(fig_params):
    # the same sweep on [0,1] carries the unit-shift identity by construction;
    # check it against a shifted start: E ceil from x and from x+1 differ by 1
    d = imp.solve_expected_ceiling(fig_params, 0.2, Q=0.3, n=300)
    assert d.values[-1] - d.values[0] == pytest.approx(1.0, abs=1e-9)


def test_impact_positive_under_stationary_start(fig_params):
    d = imp.solve_expected_ceiling(fig_params, 0.2, Q=0.5, n=300)
    rest = st.psi(fig_params, 300)
    val = np.trapezoid(d.values * rest.values, d.x)
    assert val - 1.0 > 0.0


def test_impact_cfl_guard(fig_params):
    with pytest.raises(CflError):
        imp.solve_expected_ceiling(fig_params, 0.2, Q=0.5, n=300, dt=1.0)


def test_marginal_curve_endpoints(fig_params):
    rest_wing = 10.0 * st.wing(st.psi(fig_params, 600))
    order_wing = 10.0 * st.wing(st.chi(fig_params, 0.2, 600))
    c = imp.marginal_impact_curve(fig_params, 0.2, [0.0, 3.0], n=600)
    assert c.impact[0] == pytest.approx(rest_wing, rel=1e-3)
    assert c.impact[1] == pytest.approx(order_wing, rel=1e-3)
    assert c.impact[0] > c.impact[1]  # impact starts steep and flattens


def test_resilience_shape(fig_params):
    v = np.linspace(0.0, 6.0, 16)
    c = imp.resilience_curve(fig_params, 0.2, v, n=250)
    assert c.r[0] == 0.0
    d1 = np.diff(c.r)
    assert np.all(d1 <= 1e-12)
    d2 = np.diff(c.r, 2)
    assert np.all(d2 >= -1e-6)
    assert c.r[-1] < -0.05  # strictly negative plateau: no full reversion
    assert c.r[-1] == pytest.approx(c.r[-2], abs=1e-4)


def test_mc_driftless_impact_zero(driftless_params):
    mean, se = imp.mc_impact(driftless_params, 0.2, 0.4, npaths=2000, seed=5, dq=1e-3)
    assert abs(mean) < 3 * se


def test_mc_matches_pde_midrange(fig_params):
    q = 0.5
    pde = imp.impact_curve(fig_params, 0.2, [q], n=400).impact[0]
    mean, se = imp.mc_impact(fig_params, 0.2, q, npaths=3000, seed=6, dq=6.25e-5)
    assert abs(mean - pde) < 3 * se


def test_mc_window_variant_converges(fig_params):
    # sampling the start from a window of the no-order dynamics approaches the
    # stationary-start estimate as the window grows
    q = 0.3
    ref, _ = imp.mc_impact(fig_params, 0.2, q, npaths=4000, seed=7, dq=2.5e-4)
    err = []
    for L in (1.0, 10.0):
        m, _ = imp.mc_impact(fig_params, 0.2, q, npaths=800, seed=8, L=L, dq=2.5e-4)
        err.append(abs(m - ref))
    assert err[-1] < max(err[0], 0.2)


def test_mc_requires_enough_paths(fig_params):
    with pytest.raises(ValueError):
        imp.mc_impact(fig_params, 0.2, 0.5, npaths=10, seed=1)


def test_curve_export_roundtrip(tmp_path, fig_params):
    c = imp.impact_curve(fig_params, 0.2, np.linspace(0, 1, 5), n=150)
    p = tmp_path / "impact.csv"
    c.to_csv(p)
    data = np.loadtxt(p, delimiter=",", skiprows=1)
    assert np.allclose(data[:, 0], c.q)
    assert np.allclose(data[:, 1], c.impact)
