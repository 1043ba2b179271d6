"""Expected price impact of a volume-weighted execution and the price
resilience after it ends.

Impact is the expected displacement of the best-ask level (the ceiling of
the fundamental price) under the in-order dynamics, started from the
stationary no-order law.  Three routes are implemented and cross-checked:
a backward parabolic solve of the expected ceiling, a forward evolution of
the price density whose boundary wing gives the marginal impact directly,
and plain Monte Carlo.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import CflError
from .params import ModelParams, mu0_hat, mu1_hat, sigma_hat
from .sim import coefficient_table, diffusion_terminals
from .stationary import Density, chi, psi, transient_fp, wing

__all__ = [
    "ImpactCurve",
    "ResilienceCurve",
    "solve_expected_ceiling",
    "expected_ceiling_snapshots",
    "impact_curve",
    "marginal_impact_curve",
    "resilience_curve",
    "mc_impact",
]

_CFL_SAFETY = 0.9


@dataclass(frozen=True)
class ImpactCurve:
    """Expected impact (ticks) versus executed volume."""

    q: np.ndarray
    impact: np.ndarray
    theta: float
    method: str
    se: np.ndarray | None = None

    def to_csv(self, path: str | Path) -> None:
        if self.se is None:
            arr = np.column_stack([self.q, self.impact])
            np.savetxt(path, arr, delimiter=",", header="q,impact", comments="")
        else:
            arr = np.column_stack([self.q, self.impact, self.se])
            np.savetxt(path, arr, delimiter=",", header="q,impact,se", comments="")

    def to_json(self, path: str | Path, extra: dict | None = None) -> None:
        meta = {
            "theta": self.theta,
            "method": self.method,
            "q": self.q.tolist(),
            "impact": self.impact.tolist(),
            "se": None if self.se is None else self.se.tolist(),
        }
        if extra:
            meta.update(extra)
        Path(path).write_text(json.dumps(meta))


@dataclass(frozen=True)
class ResilienceCurve:
    """Expected post-order price reversion (ticks) versus market volume."""

    vbar: np.ndarray
    r: np.ndarray
    theta: float

    def to_csv(self, path: str | Path) -> None:
        arr = np.column_stack([self.vbar, self.r])
        np.savetxt(path, arr, delimiter=",", header="vbar,resilience", comments="")

    def to_json(self, path: str | Path, extra: dict | None = None) -> None:
        meta = {"theta": self.theta, "vbar": self.vbar.tolist(), "resilience": self.r.tolist()}
        if extra:
            meta.update(extra)
        Path(path).write_text(json.dumps(meta))


def _backward_tables(params: ModelParams, theta: float, n: int, market_clock: bool):
    """Nodal drift and squared volatility for the backward solve.

    The drift jumps across integers; the wrap node takes the average of its
    two one-sided limits so centered differences stay consistent there.
    """
    p = params.with_theta(1.0 if market_clock else theta)
    x = np.arange(n) / n
    mu_fn = mu0_hat if market_clock else mu1_hat
    mu = np.asarray(mu_fn(p, x), dtype=np.float64)
    mu[0] = 0.5 * (float(mu_fn(p, 0.0)) + float(mu_fn(p, 1.0)))
    sig2 = np.asarray(sigma_hat(p, x), dtype=np.float64) ** 2
    sig2[0] = 0.5 * (float(sigma_hat(p, 0.0)) ** 2 + float(sigma_hat(p, 1.0)) ** 2)
    return mu, sig2


def _backward_dt_max(mu, sig2, dx: float) -> float:
    return _CFL_SAFETY * min(dx * dx / sig2.max(), dx / np.abs(mu).max())


def _ceiling_terminal(n: int) -> np.ndarray:
    v0 = np.ones(n, dtype=np.float64)
    v0[0] = 0.0
    return v0


def expected_ceiling_snapshots(
    params: ModelParams,
    theta: float,
    horizons,
    n: int = 400,
    dt: float | None = None,
    market_clock: bool = False,
) -> list[Density]:
    """Expected future ask level as a function of the current price.

    Solves the backward equation for E ceil(Y_h) started at x, for every
    horizon h in ``horizons``, with one explicit Euler sweep from the
    largest horizon.  The unit cell is closed by the quasi-periodic rule
    u(x + 1) = u(x) + 1, which is exact because the coefficients have period
    one and the ceiling shifts by one across integers.  With market_clock
    the whole-market dynamics drive the price instead of the in-order ones.
    """
    horizons = np.atleast_1d(np.asarray(horizons, dtype=float))
    if np.any(horizons < 0) or np.any(np.diff(horizons) < 0):
        raise ValueError("horizons must be nonnegative and nondecreasing")
    dx = 1.0 / n
    mu, sig2 = _backward_tables(params, theta, n, market_clock)
    dt_max = _backward_dt_max(mu, sig2, dx) / _CFL_SAFETY
    if dt is None:
        dt = _CFL_SAFETY * dt_max
    elif dt > dt_max:
        raise CflError(dt, dt_max)
    steps = np.rint(horizons / dt).astype(np.int64)
    snaps = _kernels.backward_ceiling_sweep(_ceiling_terminal(n), mu, sig2, dx, dt, steps)
    x = np.linspace(0.0, 1.0, n + 1)
    out = []
    for h, row in zip(horizons, snaps):
        vals = np.append(row, row[0] + 1.0)
        out.append(Density(x=x, values=vals, kind="ceiling", theta=theta, time=float(h)))
    return out


def solve_expected_ceiling(
    params: ModelParams, theta: float, Q: float, n: int = 400, dt: float | None = None
) -> Density:
    """E ceil(Y_Q) as a function of the starting point, on n+1 nodes."""
    return expected_ceiling_snapshots(params, theta, [Q], n=n, dt=dt)[0]


def _integrate_against(u_vals: np.ndarray, dens: Density) -> float:
    """Integral of the expected-ceiling profile against a density on [0, 1].

    u - x is continuous and 1-periodic (u jumps by one across integers, in
    step with the identity), so integrating w = u - x and adding the smooth
    moment of x avoids the O(dx) quadrature bias the unit jump in u would
    cause at the wrap node.
    """
    w = u_vals - dens.x
    return float(
        np.trapezoid(w * dens.values, dens.x) + np.trapezoid(dens.x * dens.values, dens.x)
    )


def impact_curve(
    params: ModelParams,
    theta: float,
    q_grid,
    n: int = 400,
    dt: float | None = None,
) -> ImpactCurve:
    """Expected impact I(Q) = integral of E ceil(Y_Q) against the resting
    density, minus one.  Q = 0 gives exactly zero: the resting density is
    atomless, so the ceiling integrates to one."""
    q_grid = np.atleast_1d(np.asarray(q_grid, dtype=float))
    snaps = expected_ceiling_snapshots(params, theta, q_grid, n=n, dt=dt)
    rest = psi(params, n)
    vals = np.array(
        [0.0 if q == 0.0 else _integrate_against(s.values, rest) - 1.0
         for q, s in zip(q_grid, snaps)]
    )
    return ImpactCurve(q=q_grid, impact=vals, theta=theta, method="pde")


def marginal_impact_curve(
    params: ModelParams,
    theta: float,
    q_grid,
    n: int = 400,
    dt: float | None = None,
) -> ImpactCurve:
    """Marginal impact dI/dQ as alpha times the boundary wing of the price
    density evolved from the resting law under the in-order dynamics."""
    q_grid = np.atleast_1d(np.asarray(q_grid, dtype=float))
    rest = psi(params, n)
    snaps = transient_fp(params, theta, rest, q_grid, dt=dt)
    vals = np.array([params.alpha * wing(s) for s in snaps])
    return ImpactCurve(q=q_grid, impact=vals, theta=theta, method="fp-marginal")


def resilience_curve(
    params: ModelParams,
    theta: float,
    v_grid,
    n: int = 400,
    dt: float | None = None,
) -> ResilienceCurve:
    """Expected ask displacement after the order stops, versus subsequent
    market volume.  The price then follows the whole-market dynamics, started
    from the in-order stationary law, so the curve decays from zero toward a
    negative plateau (partial reversion)."""
    v_grid = np.atleast_1d(np.asarray(v_grid, dtype=float))
    snaps = expected_ceiling_snapshots(params, theta, v_grid, n=n, dt=dt, market_clock=True)
    start = chi(params, theta, n)
    vals = np.array(
        [0.0 if v == 0.0 else _integrate_against(s.values, start) - 1.0
         for v, s in zip(v_grid, snaps)]
    )
    return ResilienceCurve(vbar=v_grid, r=vals, theta=theta)


def _sample_from_density(dens: Density, rng: np.random.Generator, size: int) -> np.ndarray:
    cdf = np.concatenate([[0.0], np.cumsum((dens.values[1:] + dens.values[:-1]) * np.diff(dens.x) / 2.0)])
    cdf /= cdf[-1]
    return np.interp(rng.random(size), cdf, dens.x)


def mc_impact(
    params: ModelParams,
    theta: float,
    Q: float,
    npaths: int,
    seed: int,
    L: float | None = None,
    dq: float = 1e-3,
    x0: float = 0.5,
) -> tuple[float, float]:
    """Monte Carlo impact estimate, returned as (mean, standard error).

    Without L, starting points are drawn from the stationary resting density
    and the estimate is the mean of ceil(Y_Q) - 1.  With L, each path first
    runs the no-order dynamics from x0 for an independent U(0, L) volume
    (an imperfect stationarization that converges as L grows) and the
    estimate is the mean of ceil(Y_Q) - ceil(X_eta).
    """
    if npaths < 100:
        raise ValueError(f"npaths must be at least 100, got {npaths}")
    root = np.random.SeedSequence(seed)
    if L is None:
        rng = np.random.Generator(np.random.PCG64(root.spawn(1)[0]))
        starts = _sample_from_density(psi(params), rng, npaths)
        base = np.ones(npaths)
    else:
        rng = np.random.Generator(np.random.PCG64(root.spawn(1)[0]))
        etas = rng.random(npaths) * L
        p = params.with_theta(theta)
        mu_tab = coefficient_table(lambda y: mu0_hat(p, y))
        sig_tab = coefficient_table(lambda y: sigma_hat(p, y))
        children = root.spawn(npaths + 1)[1:]
        starts = np.empty(npaths)
        for i, child in enumerate(children):
            ni = max(int(round(etas[i] / dq)), 1)
            z = np.random.Generator(np.random.PCG64(child)).standard_normal(ni)
            starts[i] = _kernels.em_path(mu_tab, sig_tab, x0, dq, z)[-1]
        base = np.ceil(starts)
    term = diffusion_terminals(params, "Y", starts, Q, dq, npaths, seed + 1, theta=theta)
    vals = np.ceil(term) - base
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(npaths))
