"""Market simulators: the finite-activity jump-diffusion market, its
multi-agent decomposition, the volume-clock diffusion limits, the business
clock time change, and synthetic order-book event streams.

All simulators are deterministic in (params, seed).  Randomness is drawn up
front in numpy and handed to the kernels, so the compiled and pure-python
backends produce bit-identical paths.  Batched runs spawn one child seed per
path, which makes results independent of worker count or scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .params import CdfSpec, ModelParams, mu0_hat, mu1_hat, sigma_hat

__all__ = [
    "FinitePath",
    "DiffusionPath",
    "ResampledPath",
    "SyntheticLobConfig",
    "simulate_finite",
    "simulate_multi_agent",
    "simulate_diffusion_X",
    "simulate_diffusion_Y",
    "diffusion_terminals",
    "business_clock",
    "synth_lob_events",
]

_TABLE_SIZE = 4096


def coefficient_table(fn, m: int = _TABLE_SIZE) -> np.ndarray:
    """Sample a 1-periodic coefficient at m+1 uniform nodes on [0, 1].

    The kernels interpolate these tables linearly at y mod 1; the top node
    holds the left limit at 1 (the value approached as y increases to an
    integer).  Evaluating fn at 1.0 gives exactly that limit because the
    coefficient formulas are written on the closed cell.
    """
    return np.asarray(fn(np.linspace(0.0, 1.0, m + 1)), dtype=np.float64)


def sample_offsets(F: CdfSpec, rng: np.random.Generator, size: int) -> np.ndarray:
    """Draw reservation-price offsets with law F by inverse transform."""
    u = rng.random(size)
    if F.kind == "uniform":
        return (2.0 * u - 1.0) * F.a
    grid = np.linspace(F.nodes[0], F.nodes[-1], 4097)
    cv = np.asarray(F.cdf(grid))
    return np.interp(u, cv, grid)


@dataclass(frozen=True)
class FinitePath:
    """One realization of the finite-activity market.

    ``t`` are arrival times, ``x_pre`` the fundamental price just before
    each arrival, ``side`` the mark (+1 buy, -1 sell, 0 no trade); every
    trade has size ``delta`` and moves the price by ``alpha * delta``.
    """

    t: np.ndarray
    x_pre: np.ndarray
    side: np.ndarray
    delta: float
    alpha: float
    x0: float
    x_final: float
    T: float

    @property
    def x_post(self) -> np.ndarray:
        return self.x_pre + self.side * self.alpha * self.delta

    @property
    def sizes(self) -> np.ndarray:
        return self.delta * np.abs(self.side).astype(np.float64)

    @property
    def cum_flow(self) -> np.ndarray:
        """Signed traded volume (buys minus sells) just after each arrival."""
        return self.delta * np.cumsum(self.side, dtype=np.float64)

    @property
    def cum_volume(self) -> np.ndarray:
        """Total traded volume just after each arrival; nondecreasing."""
        return np.cumsum(self.sizes)

    @property
    def n_trades(self) -> int:
        return int(np.count_nonzero(self.side))

    def to_csv(self, path: str | Path) -> None:
        sides = np.choose(self.side + 1, ["sell", "none", "buy"])
        with open(path, "w") as fh:
            fh.write("t,x,side,size,cum_volume\n")
            cv = self.cum_volume
            for i in range(self.t.size):
                fh.write(
                    f"{self.t[i]!r},{self.x_post[i]!r},{sides[i]},"
                    f"{self.sizes[i]!r},{cv[i]!r}\n"
                )


@dataclass(frozen=True)
class DiffusionPath:
    """Euler path of a volume-clock diffusion (no-order X or in-order Y)."""

    v: np.ndarray
    x: np.ndarray
    theta: float
    dv: float
    kind: str

    def to_csv(self, path: str | Path) -> None:
        np.savetxt(
            path,
            np.column_stack([self.v, self.x]),
            delimiter=",",
            header="v,x",
            comments="",
        )


@dataclass(frozen=True)
class ResampledPath:
    """A finite path read on the business clock at given volume targets."""

    volumes: np.ndarray
    t: np.ndarray
    x: np.ndarray


@dataclass(frozen=True)
class SyntheticLobConfig:
    """Book-depth model used to dress a simulated path as LOB events.

    depth: constant total depth S, or None to draw lognormal depths.
    depth_mu, depth_sigma: log-space parameters of the lognormal draw.
    tick: price increment in price units.
    session: (open, close) in nanoseconds since midnight.
    """

    depth: float | None = 1000.0
    depth_mu: float = 7.0
    depth_sigma: float = 0.25
    tick: int = 1
    session: tuple[int, int] = (34_200_000_000_000, 57_600_000_000_000)
    max_retries: int = 10


def _segment_substeps(t: np.ndarray, T: float, dt_max: float):
    """Sub-step counts and step widths for the inter-arrival segments."""
    seg = np.diff(np.concatenate([[0.0], t, [T]]))
    nsub = np.ceil(seg / dt_max).astype(np.int64)
    sqh = np.sqrt(np.where(nsub > 0, seg / np.maximum(nsub, 1), 0.0))
    return nsub, sqh


def _check_finite_args(lam, T, x0):
    if not lam > 0:
        raise ValueError(f"arrival rate must be positive, got {lam}")
    if not T > 0:
        raise ValueError(f"horizon must be positive, got {T}")
    if not math.isfinite(x0):
        raise ValueError(f"x0 must be finite, got {x0}")


def simulate_finite(
    params: ModelParams,
    lam: float,
    T: float,
    x0: float,
    seed: int,
    dt_max: float | None = None,
) -> FinitePath:
    """Simulate the finite-activity market at arrival rate lam over [0, T].

    Trade size is gamma / lam, so total arrival intensity in volume units is
    gamma regardless of lam.  At each Poisson arrival a fresh offset xi is
    drawn from F; the arrival buys if xi reaches the ask (xi >= ceil(x) - x),
    sells if it reaches the bid (xi <= floor(x) - x), and otherwise leaves no
    mark.  A trade moves the price by alpha * delta.  Between arrivals the
    price diffuses with volatility sigma, advanced by Euler sub-steps no
    longer than dt_max (default 1e-3 * (1/lam + 1)).
    """
    _check_finite_args(lam, T, x0)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    delta = params.gamma / lam
    if dt_max is None:
        dt_max = 1e-3 * (1.0 / lam + 1.0)
    m = int(rng.poisson(lam * T))
    t = np.sort(rng.random(m)) * T
    nsub, sqh = _segment_substeps(t, T, dt_max)
    z = rng.standard_normal(int(nsub.sum()))
    xi = sample_offsets(params.F, rng, m)
    sig_tab = coefficient_table(params.sigma_fn)
    x_pre, side, x_final = _kernels.finite_market(
        x0, params.alpha * delta, sig_tab, nsub, sqh, z, xi
    )
    return FinitePath(
        t=t,
        x_pre=x_pre,
        side=side,
        delta=delta,
        alpha=params.alpha,
        x0=x0,
        x_final=float(x_final),
        T=T,
    )


def simulate_multi_agent(
    params: ModelParams,
    lambdas,
    T: float,
    x0: float,
    seed: int,
    dt_max: float | None = None,
) -> tuple[list[FinitePath], FinitePath]:
    """Simulate K agents with rates lambdas trading against one price.

    The aggregate arrival stream is Poisson at the summed rate with each
    arrival assigned to an agent in proportion to its rate (superposition).
    An arrival trades when its offset lands outside the spread interval
    (floor(x) - x, ceil(x) - x); the direction is then drawn from the
    conditional buy probability F(x-1) / (F(x-1) + F(-x)).  Returns the
    per-agent paths (sharing the common price samples) and the aggregate.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.size == 0:
        raise ValueError("lambdas must be nonempty")
    if np.any(lambdas <= 0):
        raise ValueError("agent rates must all be positive")
    lam = float(lambdas.sum())
    _check_finite_args(lam, T, x0)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    delta = params.gamma / lam
    if dt_max is None:
        dt_max = 1e-3 * (1.0 / lam + 1.0)
    m = int(rng.poisson(lam * T))
    t = np.sort(rng.random(m)) * T
    agent = rng.choice(lambdas.size, size=m, p=lambdas / lam)
    nsub, sqh = _segment_substeps(t, T, dt_max)
    z = rng.standard_normal(int(nsub.sum()))
    xi = sample_offsets(params.F, rng, m)
    v = rng.random(m)
    sig_tab = coefficient_table(params.sigma_fn)
    fp_tab = coefficient_table(lambda y: params.F.cdf(y - 1.0))
    fm_tab = coefficient_table(lambda y: params.F.cdf(-y))
    x_pre, side, x_final = _kernels.finite_market_zeta(
        x0, params.alpha * delta, sig_tab, fp_tab, fm_tab, nsub, sqh, z, xi, v
    )
    aggregate = FinitePath(
        t=t,
        x_pre=x_pre,
        side=side,
        delta=delta,
        alpha=params.alpha,
        x0=x0,
        x_final=float(x_final),
        T=T,
    )
    agents = []
    for j in range(lambdas.size):
        sel = agent == j
        agents.append(
            FinitePath(
                t=t[sel],
                x_pre=x_pre[sel],
                side=side[sel],
                delta=delta,
                alpha=params.alpha,
                x0=x0,
                x_final=float(x_final),
                T=T,
            )
        )
    return agents, aggregate


def _diffusion(params, theta, mu_fn, x0, V, dv, seed, kind) -> DiffusionPath:
    if not dv > 0:
        raise ValueError(f"dv must be positive, got {dv}")
    if not V > 0:
        raise ValueError(f"volume horizon must be positive, got {V}")
    if not math.isfinite(x0):
        raise ValueError(f"x0 must be finite, got {x0}")
    p = params.with_theta(theta)
    n = int(round(V / dv))
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    z = rng.standard_normal(n)
    mu_tab = coefficient_table(lambda y: mu_fn(p, y))
    sig_tab = coefficient_table(lambda y: sigma_hat(p, y))
    x = _kernels.em_path(mu_tab, sig_tab, x0, dv, z)
    return DiffusionPath(v=np.arange(n + 1) * dv, x=x, theta=theta, dv=dv, kind=kind)


def simulate_diffusion_X(
    params: ModelParams, x0: float, V: float, dv: float, seed: int, theta: float | None = None
) -> DiffusionPath:
    """Volume-clock diffusion of the fundamental price with no meta-order."""
    th = params.theta if theta is None else theta
    return _diffusion(params, th, mu0_hat, x0, V, dv, seed, "X")


def simulate_diffusion_Y(
    params: ModelParams, x0: float, Q: float, dq: float, seed: int, theta: float | None = None
) -> DiffusionPath:
    """Volume-clock diffusion of the price during a buy meta-order."""
    th = params.theta if theta is None else theta
    return _diffusion(params, th, mu1_hat, x0, Q, dq, seed, "Y")


def diffusion_terminals(
    params: ModelParams,
    kind: str,
    x0,
    V: float,
    dv: float,
    npaths: int,
    seed: int,
    theta: float | None = None,
) -> np.ndarray:
    """Terminal values of npaths independent diffusion paths.

    ``x0`` may be a scalar or an array of per-path starting points.  Normals
    are drawn from one child seed per path, so the result does not depend on
    how paths are scheduled.
    """
    if kind not in ("X", "Y"):
        raise ValueError(f"kind must be 'X' or 'Y', got {kind!r}")
    th = params.theta if theta is None else theta
    p = params.with_theta(th)
    n = int(round(V / dv))
    children = np.random.SeedSequence(seed).spawn(npaths)
    z = np.empty((npaths, n), dtype=np.float64)
    for i, child in enumerate(children):
        z[i] = np.random.Generator(np.random.PCG64(child)).standard_normal(n)
    mu_fn = mu0_hat if kind == "X" else mu1_hat
    mu_tab = coefficient_table(lambda y: mu_fn(p, y))
    sig_tab = coefficient_table(lambda y: sigma_hat(p, y))
    x0v = np.ascontiguousarray(
        np.broadcast_to(np.asarray(x0, dtype=np.float64), (npaths,))
    )
    return _kernels.em_paths_terminal(mu_tab, sig_tab, x0v, dv, z)


def business_clock(path: FinitePath, target_volumes, clock_volumes=None) -> ResampledPath:
    """Read the price on the business clock.

    For each target v, finds the first arrival whose running clock volume
    strictly exceeds v (the right-continuous inverse of the volume process)
    and returns the post-trade price there.  ``clock_volumes`` defaults to
    the path's own total traded volume; pass an agent's cumulative volume
    evaluated at the same arrival times to use that agent as the clock.
    """
    targets = np.atleast_1d(np.asarray(target_volumes, dtype=float))
    if np.any(np.diff(targets) < 0):
        raise ValueError("target volumes must be nondecreasing")
    cv = path.cum_volume if clock_volumes is None else np.asarray(clock_volumes, dtype=float)
    if cv.shape != path.t.shape:
        raise ValueError("clock_volumes must align with the path's arrival times")
    idx = np.searchsorted(cv, targets, side="right")
    if np.any(idx >= cv.size):
        bad = targets[idx >= cv.size][0]
        raise ValueError(
            f"target volume {bad} is never strictly exceeded (realized volume "
            f"{cv[-1] if cv.size else 0.0})"
        )
    return ResampledPath(volumes=targets, t=path.t[idx], x=path.x_post[idx])


def synth_lob_events(path: FinitePath, config: SyntheticLobConfig, seed: int):
    """Dress a simulated path's trades as order-book events.

    Each trade becomes an event whose pre-trade volumes reproduce the price's
    fractional part as the book imbalance vb / (vb + va); the hit side is
    decremented by the trade size.  Total depth is either constant or drawn
    lognormal per event; draws too shallow for the trade are redrawn up to
    config.max_retries times, then the trade is skipped (counter returned on
    the stream as ``skipped``).  Timestamps are placed uniformly inside the
    session window.  Returns an EventStream from the estimators module.
    """
    from .estimators import EventStream, LobEvent

    trade = path.side != 0
    if not np.any(trade):
        raise ValueError("path has no trades to dress as events")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    x_pre = path.x_pre[trade]
    sides = path.side[trade]
    size = path.delta
    open_ns, close_ns = config.session
    span = close_ns - open_ns
    k = x_pre.size
    ts = open_ns + np.sort((np.arange(k) + 0.5) / k * span).astype(np.int64)
    events = []
    skipped = 0
    for i in range(k):
        frac = x_pre[i] - math.floor(x_pre[i])
        depth = None
        for _ in range(config.max_retries + 1):
            s = config.depth if config.depth is not None else float(
                rng.lognormal(config.depth_mu, config.depth_sigma)
            )
            vb = frac * s
            va = s - vb
            hit = va if sides[i] > 0 else vb
            if size <= hit:
                depth = s
                break
            if config.depth is not None:
                break
        if depth is None:
            skipped += 1
            continue
        bid = int(math.floor(x_pre[i]))
        ask = bid + 1
        vb_post, va_post = vb, va
        bid_post, ask_post = bid, ask
        if sides[i] > 0:
            va_post = va - size
            if va_post <= 0.0:
                va_post = 0.0
                ask_post = ask + 1
        else:
            vb_post = vb - size
            if vb_post <= 0.0:
                vb_post = 0.0
                bid_post = bid - 1
        events.append(
            LobEvent(
                ts_ns=int(ts[i]),
                side="buy" if sides[i] > 0 else "sell",
                size=size,
                bid_px_pre=bid * config.tick,
                ask_px_pre=ask * config.tick,
                vb_pre=vb,
                va_pre=va,
                bid_px_post=bid_post * config.tick,
                ask_px_post=ask_post * config.tick,
                vb_post=vb_post,
                va_post=va_post,
                tick=config.tick,
            )
        )
    return EventStream(events=events, skipped=skipped)
