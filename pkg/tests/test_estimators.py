import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hst

from impactlab import estimators as est
from impactlab.errors import EmptySampleError

SESSION = est.DEFAULT_SESSION
MID_TS = (SESSION[0] + SESSION[1]) // 2


def make_event(**kw):
    base = dict(
        ts_ns=MID_TS,
        side="buy",
        size=100.0,
        bid_px_pre=1000,
        ask_px_pre=1001,
        vb_pre=450.0,
        va_pre=550.0,
        bid_px_post=1000,
        ask_px_post=1001,
        vb_post=550.0,
        va_post=450.0,
        tick=1,
    )
    base.update(kw)
    return est.LobEvent(**base)


def event_row(ev):
    return ",".join(
        repr(getattr(ev, c)) if isinstance(getattr(ev, c), float) else str(getattr(ev, c))
        for c in est.CSV_COLUMNS
    )


HEADER = ",".join(est.CSV_COLUMNS)


# -- loading -----------------------------------------------------------------


def test_load_well_formed_file(tmp_path):
    p = tmp_path / "ev.csv"
    rows = [event_row(make_event(ts_ns=MID_TS + i)) for i in range(3)]
    p.write_text(HEADER + "\n" + "\n".join(rows) + "\n")
    stream = est.load_events(p)
    assert len(stream) == 3 and not stream.rejected and not stream.warnings


def test_load_rejects_bad_header(tmp_path):
    p = tmp_path / "ev.csv"
    p.write_text("time,side\n1,buy\n")
    with pytest.raises(ValueError, match="header"):
        est.load_events(p)


def test_load_rejects_undefined_imbalance(tmp_path):
    p = tmp_path / "ev.csv"
    bad = make_event(vb_pre=0.0, va_pre=0.0, vb_post=0.0, va_post=0.0)
    p.write_text(HEADER + "\n" + event_row(bad) + "\n")
    stream = est.load_events(p)
    assert len(stream) == 0
    assert stream.rejected == [(2, "undefined_imbalance")]


def test_load_rejects_invariant_violation(tmp_path):
    p = tmp_path / "ev.csv"
    bad = make_event(side="buy", va_pre=100.0, va_post=200.0, vb_pre=100.0)
    p.write_text(HEADER + "\n" + event_row(bad) + "\n")
    stream = est.load_events(p)
    assert stream.rejected == [(2, "ask_volume_grew_on_buy")]


def test_load_rejects_negative_volume_and_parse_errors(tmp_path):
    p = tmp_path / "ev.csv"
    neg = make_event(vb_post=-1.0)
    rows = [event_row(neg), "not,a,row"]
    p.write_text(HEADER + "\n" + "\n".join(rows) + "\n")
    stream = est.load_events(p)
    codes = dict(stream.rejected)
    assert codes[2] == "negative_volume"
    assert codes[3] == "field_count"


def test_load_warns_on_nonmonotone_timestamps(tmp_path):
    p = tmp_path / "ev.csv"
    rows = [event_row(make_event(ts_ns=MID_TS + 10)), event_row(make_event(ts_ns=MID_TS))]
    p.write_text(HEADER + "\n" + "\n".join(rows) + "\n")
    stream = est.load_events(p)
    assert len(stream) == 2 and len(stream.warnings) == 1


# -- filtering ---------------------------------------------------------------


def test_filter_drops_wide_spread():
    wide = make_event(ask_px_pre=1002)
    out = est.filter_events(est.EventStream(events=[wide]))
    assert len(out) == 0 and out.filter_report["dropped"]["spread"] == 1


def test_filter_drops_out_of_session():
    early = make_event(ts_ns=SESSION[0] - 1)
    out = est.filter_events(est.EventStream(events=[early]))
    assert len(out) == 0 and out.filter_report["dropped"]["session"] == 1


def test_filter_drops_oversized_trades():
    deep = make_event(size=551.0)  # exceeds va_pre
    out = est.filter_events(est.EventStream(events=[deep]))
    assert len(out) == 0 and out.filter_report["dropped"]["depth"] == 1


def test_filter_forces_emptied_side_to_zero():
    # a buy clearing the ask and widening the spread keeps the event but pins
    # the post imbalance at one
    ev = make_event(size=550.0, va_post=0.0, ask_px_post=1002)
    out = est.filter_events(est.EventStream(events=[ev]))
    assert len(out) == 1
    kept = out.events[0]
    assert kept.va_post == 0.0 and kept.imbalance_post == 1.0


def test_filter_report_volume_fractions():
    evs = [
        make_event(size=100.0),
        make_event(size=300.0, ask_px_pre=1002),  # dropped: spread
        make_event(size=600.0, ts_ns=SESSION[0] - 5),  # dropped: session
    ]
    out = est.filter_events(est.EventStream(events=evs))
    r = out.filter_report
    assert r["volume_fraction_of_total"] == pytest.approx(0.1)
    assert r["volume_fraction_of_session"] == pytest.approx(0.25)


# -- weighted estimators -----------------------------------------------------


def test_weighted_single_buy_example():
    # size 100, pre imbalance 0.45 (bin 5), post 0.55 (bin 6), w = 0.5:
    # half the mass in each bin, i.e. density value 5.0 in both
    ev = make_event()
    assert ev.imbalance_pre == pytest.approx(0.45)
    assert ev.imbalance_post == pytest.approx(0.55)
    d = est.estimate_weighted(est.EventStream(events=[ev]), w=0.5)
    expect = np.zeros(10)
    expect[4] = expect[5] = 5.0
    assert np.allclose(d.values, expect)


def test_weighted_w1_only_pre_side():
    ev = make_event()
    d = est.estimate_weighted(est.EventStream(events=[ev]), w=1.0)
    assert d.values[4] == pytest.approx(10.0)
    assert d.values[5] == 0.0


def test_weighted_uniform_ignores_size():
    small = make_event(size=100.0, vb_pre=50.0, va_pre=950.0, vb_post=50.0, va_post=850.0)
    large = make_event(size=900.0, vb_pre=900.0, va_pre=100.0, va_post=0.0, vb_post=900.0)
    d = est.estimate_weighted_uniform(est.EventStream(events=[small, large]), w=1.0)
    # one unit of mass per trade regardless of the 100 vs 900 sizes
    assert d.values[0] == pytest.approx(5.0)
    assert d.values[9] == pytest.approx(5.0)


def test_weighted_variants_coincide_for_equal_sizes(fig_params):
    from impactlab import sim

    path = sim.simulate_finite(fig_params, 1000.0, 5.0, 0.4, seed=23)
    stream = est.filter_events(sim.synth_lob_events(path, sim.SyntheticLobConfig(), seed=24))
    a = est.estimate_weighted(stream, w=0.5)
    b = est.estimate_weighted_uniform(stream, w=0.5)
    assert np.allclose(a.values, b.values, atol=1e-10)


def test_empty_stream_raises():
    with pytest.raises(EmptySampleError):
        est.estimate_weighted(est.EventStream(events=[]))
    with pytest.raises(EmptySampleError):
        est.estimate_continuous(est.EventStream(events=[]))


# -- continuous estimator ----------------------------------------------------


def quadrature_masses(ev, K=10, m=200_001):
    """Numerical-quadrature oracle for the per-bin volume split."""
    v = np.linspace(0.0, ev.size, m)
    if ev.side == "buy":
        c = ev.vb_pre / (ev.vb_pre + ev.va_pre - v)
    else:
        c = (ev.vb_pre - v) / (ev.vb_pre + ev.va_pre - v)
    c = np.clip(c, 0.0, 1.0)
    idx = np.minimum((c * K).astype(int), K - 1)
    out = np.bincount(idx, minlength=K).astype(float)
    return out / m * ev.size


def test_continuous_buy_against_quadrature():
    ev = make_event(size=500.0, vb_pre=500.0, va_pre=500.0, vb_post=500.0, va_post=0.0)
    masses = est.continuous_bin_masses(ev, 10)
    assert masses.sum() == pytest.approx(500.0, abs=1e-12)
    assert np.allclose(masses, quadrature_masses(ev), atol=0.05)
    assert np.all(masses[:5] == 0.0)  # path runs upward from imbalance 0.5


def test_continuous_sell_against_quadrature():
    ev = make_event(
        side="sell", size=300.0, vb_pre=300.0, va_pre=700.0, vb_post=0.0, va_post=700.0
    )
    masses = est.continuous_bin_masses(ev, 10)
    assert masses.sum() == pytest.approx(300.0, abs=1e-12)
    assert np.allclose(masses, quadrature_masses(ev), atol=0.05)
    assert np.all(masses[3:] == 0.0)  # path runs downward from imbalance 0.3


def test_continuous_small_trade_limit():
    ev = make_event(size=1e-9, va_post=550.0 - 1e-9)
    masses = est.continuous_bin_masses(ev, 10)
    assert masses[4] == pytest.approx(ev.size, rel=1e-6)


def test_continuous_degenerate_buy_skipped():
    # a buy clearing the entire book with an empty bid has no invertible path
    ev = make_event(size=500.0, vb_pre=0.0, va_pre=500.0, vb_post=0.0, va_post=0.0)
    assert est.continuous_bin_masses(ev, 10) is None
    d = est.estimate_continuous(est.EventStream(events=[ev, make_event()]))
    assert d.skipped == 1


# -- property tests ----------------------------------------------------------


volumes = hst.floats(min_value=0.0, max_value=1e6, allow_nan=False, allow_infinity=False)


@given(vb=volumes, va=volumes, frac=hst.floats(0.0, 1.0), buy=hst.booleans())
@settings(max_examples=300, deadline=None)
def test_per_event_conservation(vb, va, frac, buy):
    opp = va if buy else vb
    size = frac * opp
    if vb + va <= 0.0 or size <= 0.0:
        return
    ev = make_event(
        side="buy" if buy else "sell",
        size=size,
        vb_pre=vb,
        va_pre=va,
        vb_post=vb if buy else vb - size,
        va_post=va - size if buy else va,
    )
    masses = est.continuous_bin_masses(ev, 10)
    if masses is None:
        return
    assert masses.min() >= -1e-12 * size
    assert abs(masses.sum() - size) <= 1e-12 * max(size, 1.0)


@given(
    data=hst.lists(
        hst.tuples(
            hst.floats(0.01, 0.99),  # pre-trade imbalance
            hst.floats(1e-3, 1e6),   # total book depth
            hst.floats(0.01, 1.0),   # executed fraction of the opposite queue
            hst.booleans(),
        ),
        min_size=1,
        max_size=40,
    ),
    w=hst.floats(0.0, 1.0),
)
@settings(max_examples=200, deadline=None)
def test_estimators_normalize(data, w):
    events = []
    for pre, tot, frac, buy in data:
        vb = pre * tot
        va = tot - vb
        size = frac * (va if buy else vb)  # filtered streams never exceed this
        if size <= 0.0:
            continue
        if buy:
            ev = make_event(side="buy", size=size, vb_pre=vb, va_pre=va,
                            vb_post=vb, va_post=va - size)
        else:
            ev = make_event(side="sell", size=size, vb_pre=vb, va_pre=va,
                            vb_post=vb - size, va_post=va)
        events.append(ev)
    if not events:
        return
    stream = est.EventStream(events=events)
    for d in (
        est.estimate_weighted(stream, w=w),
        est.estimate_weighted_uniform(stream, w=w),
        est.estimate_continuous(stream),
    ):
        assert abs(d.values.mean() - 1.0) <= 1e-10


def test_bin_convention_top_bin_closed():
    assert est._bin_index(1.0, 10) == 9
    assert est._bin_index(0.9999999, 10) == 9
    assert est._bin_index(0.0, 10) == 0
    assert est._bin_index(0.1, 10) == 1


def test_events_roundtrip_csv(tmp_path):
    evs = [make_event(ts_ns=MID_TS + i, size=100.0 + 0.1 * i) for i in range(5)]
    p = tmp_path / "ev.csv"
    est.events_to_csv(evs, p)
    back = est.load_events(p)
    assert back.events == evs
