import numpy as np
import pytest

from impactlab import sim
from impactlab.params import CdfSpec, ModelParams, SigmaSpec


def test_finite_path_determinism(fig_params):
    a = sim.simulate_finite(fig_params, 500.0, 2.0, 0.5, seed=7)
    b = sim.simulate_finite(fig_params, 500.0, 2.0, 0.5, seed=7)
    c = sim.simulate_finite(fig_params, 500.0, 2.0, 0.5, seed=8)
    assert np.array_equal(a.t, b.t) and np.array_equal(a.x_pre, b.x_pre)
    assert np.array_equal(a.side, b.side)
    assert not np.array_equal(a.t, c.t)


def test_finite_path_structure(fig_params):
    p = sim.simulate_finite(fig_params, 1000.0, 2.0, 0.5, seed=3)
    assert np.all(np.diff(p.t) > 0)
    assert set(np.unique(p.side)) <= {-1, 0, 1}
    # every trade moves the price by alpha * delta in the trade direction
    post = p.x_post
    moved = post - p.x_pre
    trades = p.side != 0
    assert np.allclose(moved[trades], fig_params.alpha * p.delta * p.side[trades])
    assert np.allclose(moved[~trades], 0.0)
    assert p.cum_volume[-1] == pytest.approx(p.n_trades * p.delta)


def test_finite_trade_rate_matches_arrival_split(fig_params):
    # with the uniform offset law the per-arrival trade probability is the
    # constant (2a-1)/(2a) regardless of the price position
    p = sim.simulate_finite(fig_params, 2e4, 10.0, 0.5, seed=5)
    frac = p.n_trades / p.t.size
    expect = (2 * 1.2 - 1) / (2 * 1.2)
    assert frac == pytest.approx(expect, abs=4 * np.sqrt(expect * (1 - expect) / p.t.size))


def test_multi_agent_aggregate_consistency(fig_params):
    agents, agg = sim.simulate_multi_agent(fig_params, [300.0, 700.0], 2.0, 0.5, seed=9)
    assert sum(a.t.size for a in agents) == agg.t.size
    assert sum(a.n_trades for a in agents) == agg.n_trades
    # per-agent streams partition the aggregate arrival times
    merged = np.sort(np.concatenate([a.t for a in agents]))
    assert np.array_equal(merged, agg.t)


def test_diffusion_determinism_and_shape(fig_params):
    a = sim.simulate_diffusion_X(fig_params, 0.5, 1.0, 1e-3, seed=2)
    b = sim.simulate_diffusion_X(fig_params, 0.5, 1.0, 1e-3, seed=2)
    assert np.array_equal(a.x, b.x)
    assert a.x.size == 1001 and a.x[0] == 0.5


def test_diffusion_terminals_schedule_independent(fig_params):
    # per-path child seeds: a batch of terminals equals one-at-a-time runs
    batch = sim.diffusion_terminals(fig_params, "Y", 0.5, 0.1, 1e-3, 8, seed=11)
    assert batch.shape == (8,)
    again = sim.diffusion_terminals(fig_params, "Y", 0.5, 0.1, 1e-3, 8, seed=11)
    assert np.array_equal(batch, again)


def test_driftless_diffusion_is_martingale(driftless_params):
    term = sim.diffusion_terminals(driftless_params, "X", 0.5, 0.5, 1e-3, 4000, seed=1)
    se = term.std() / np.sqrt(term.size)
    assert abs(term.mean() - 0.5) < 4 * se


def test_business_clock_inverse(fig_params):
    p = sim.simulate_finite(fig_params, 1000.0, 2.0, 0.5, seed=13)
    total = p.cum_volume[-1]
    r = sim.business_clock(p, [0.0, total / 2])
    # the clock reads the post-trade price at the first arrival whose running
    # volume strictly exceeds the target
    k0 = np.searchsorted(p.cum_volume, 0.0, side="right")
    k1 = np.searchsorted(p.cum_volume, total / 2, side="right")
    assert r.x[0] == p.x_post[k0]
    assert r.x[1] == p.x_post[k1]
    # the realized total is never strictly exceeded
    with pytest.raises(ValueError):
        sim.business_clock(p, [total])


def test_synthetic_events_reconstruct_imbalance(fig_params):
    path = sim.simulate_finite(fig_params, 2000.0, 1.0, 0.3, seed=17)
    stream = sim.synth_lob_events(path, sim.SyntheticLobConfig(), seed=18)
    assert stream.skipped == 0  # constant deep book never rejects a trade
    assert len(stream.events) == path.n_trades
    fracs = path.x_pre[path.side != 0] % 1.0
    for ev, frac in zip(stream.events, fracs):
        # pre-trade book imbalance encodes the fractional price position
        assert ev.imbalance_pre == pytest.approx(frac, abs=1e-12)
        assert ev.validate() is None
    ts = [ev.ts_ns for ev in stream.events]
    assert ts == sorted(ts)


def test_coefficient_table_exact_for_uniform(fig_params):
    from impactlab.params import mu1_hat

    tab = sim.coefficient_table(lambda y: mu1_hat(fig_params, y))
    grid = np.linspace(0.0, 1.0, 4097)
    assert np.allclose(tab, np.asarray(mu1_hat(fig_params, grid)), rtol=1e-12)


def test_offset_sampler_matches_uniform_law(rng):
    F = CdfSpec.uniform(1.2)
    x = sim.sample_offsets(F, rng, 200_000)
    assert x.min() >= -1.2 and x.max() <= 1.2
    assert abs(x.mean()) < 0.01
    assert np.std(x) == pytest.approx(1.2 / np.sqrt(3), rel=0.01)


def test_time_and_volume_horizons_positive(fig_params):
    with pytest.raises(ValueError):
        sim.simulate_finite(fig_params, 0.0, 1.0, 0.5, seed=1)
    with pytest.raises(ValueError):
        sim.simulate_diffusion_Y(fig_params, 0.5, -1.0, 1e-3, seed=1)
