"""Stationary and transient densities of the fundamental price modulo one.

The rescaled stationary density f(theta, .) solves

    1/2 f'' - d/dx[(mu_bar0 + theta * mu_bar1) f] = 0

on (0, 1) with the periodic value match f(0) = f(1) and the weighted
normalization  integral of f / sigma_bar^2 = 1.  The no-order and in-order
densities are psi = f(0,.)/sigma_bar^2 and chi = f(theta,.)/sigma_bar^2.
The solver integrates the first integral of the ODE by quadrature, so the
solution space is exactly two-dimensional and the two side conditions fix it
through a 2x2 linear system.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import cumulative_simpson, simpson
from scipy.stats import norm

from . import _kernels
from .errors import CflError, DegenerateParametersError
from .params import ModelParams, mu1_hat, mu_bar0, mu_bar1, sigma_bar, sigma_hat

__all__ = [
    "Density",
    "solve_stationary_f",
    "closed_form_uniform",
    "psi",
    "chi",
    "wing",
    "transient_fp",
    "dtheta_f_at_zero",
]

_COND_LIMIT = 1e12
_CFL_SAFETY = 0.9


@dataclass(frozen=True)
class Density:
    """Nodal values of a density (or density-like profile) on [0, 1].

    ``x`` holds n+1 uniform nodes; ``kind`` is one of psi/chi/f/g/transient;
    ``theta`` records the participation rate used; ``time`` is set for
    transient snapshots.
    """

    x: np.ndarray
    values: np.ndarray
    kind: str
    theta: float
    time: float | None = None

    @property
    def n(self) -> int:
        return self.x.size - 1

    def integral(self) -> float:
        return float(np.trapezoid(self.values, self.x))

    def __call__(self, xq):
        return np.interp(np.asarray(xq, dtype=float), self.x, self.values)

    def to_csv(self, path: str | Path) -> None:
        arr = np.column_stack([self.x, self.values])
        np.savetxt(path, arr, delimiter=",", header="x,value", comments="")

    def to_json(self, path: str | Path, params: ModelParams | None = None) -> None:
        meta = {
            "kind": self.kind,
            "theta": self.theta,
            "time": self.time,
            "params_hash": params_hash(params) if params is not None else None,
            "x": self.x.tolist(),
            "values": self.values.tolist(),
        }
        Path(path).write_text(json.dumps(meta))


def params_hash(params: ModelParams) -> str:
    return hashlib.md5(repr(params).encode()).hexdigest()


def _first_integral_solution(params: ModelParams, theta: float, n: int):
    """f = e^M (C2 + C1 J) with M = int 2*mu_bar, J = int e^-M; returns
    (x, f) with the constants fixed by periodicity and normalization."""
    x = np.linspace(0.0, 1.0, n + 1)
    mub = mu_bar0(params, x) + theta * mu_bar1(params, x)
    sb2 = np.asarray(sigma_bar(params, x)) ** 2
    M = 2.0 * cumulative_simpson(mub, x=x, initial=0.0)
    M -= M.max()  # overflow guard; rescaling is absorbed by C1, C2
    E = np.exp(M)
    J = cumulative_simpson(np.exp(-M), x=x, initial=0.0)

    A = np.array(
        [
            [E[-1] * J[-1], E[-1] - E[0]],
            [simpson(E * J / sb2, x=x), simpson(E / sb2, x=x)],
        ]
    )
    if np.linalg.cond(A) > _COND_LIMIT:
        raise DegenerateParametersError(
            f"stationary 2x2 system is near-singular (cond={np.linalg.cond(A):.2e})"
        )
    c1, c2 = np.linalg.solve(A, np.array([0.0, 1.0]))
    return x, E * (c2 + c1 * J), M, J, sb2


def solve_stationary_f(params: ModelParams, theta: float, n: int = 1000) -> Density:
    """Rescaled stationary density f(theta, .) by first-integral quadrature."""
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    if n < 16:
        raise ValueError(f"grid size n must be >= 16, got {n}")
    x, f, *_ = _first_integral_solution(params, theta, n)
    return Density(x=x, values=f, kind="f", theta=theta)


def closed_form_uniform(a: float, alpha: float, theta: float, n: int = 1000) -> Density:
    """f(theta, .) for the uniform-F, assumption-1 (rho arbitrary) model.

    Evaluates the explicit solution of the stationary ODE: a Gaussian-type
    exponential times a bracket of standard normal CDF terms, normalized to
    unit integral.  Exponents are shifted by their maximum before
    exponentiation, which the normalization absorbs.
    """
    if not a > 1.0:
        raise ValueError(f"closed form requires a > 1, got {a}")
    if not 0.0 <= theta < 1.0:
        raise ValueError(
            f"closed form divides by 1 - theta; got theta={theta} (use solve_stationary_f at theta=1)"
        )
    x = np.linspace(0.0, 1.0, n + 1)
    A = alpha / (2.0 * (2.0 * a - 1.0) * (1.0 - theta))
    e1 = A * (1.0 - 2.0 * theta + 2.0 * theta * a) ** 2
    e0 = A * (2.0 * theta * a - 1.0) ** 2
    ex = A * (2.0 * x * (1.0 - theta) + 2.0 * theta * a - 1.0) ** 2
    root = np.sqrt(alpha * (1.0 - theta) / (2.0 * a - 1.0))
    b1 = root * (1.0 - 2.0 * theta + 2.0 * theta * a) / (1.0 - theta)
    b0 = root * (2.0 * theta * a - 1.0) / (1.0 - theta)
    cx = 2.0 * root * (x + (2.0 * theta * a - 1.0) / (2.0 * (1.0 - theta)))
    bracket = norm.cdf(b1) - np.exp(e0 - e1) * norm.cdf(b0) + (np.exp(e0 - e1) - 1.0) * norm.cdf(cx)
    u = np.exp(ex - e1) * bracket
    return Density(x=x, values=u / simpson(u, x=x), kind="f", theta=theta)


def _over_sigma_bar2(params: ModelParams, dens: Density, kind: str) -> Density:
    sb2 = np.asarray(sigma_bar(params, dens.x)) ** 2
    v = dens.values / sb2
    v = v / np.trapezoid(v, dens.x)  # defensive renormalization
    return Density(x=dens.x, values=v, kind=kind, theta=dens.theta)


def psi(params: ModelParams, n: int = 1000) -> Density:
    """Stationary density of the price mod one with no meta-order."""
    return _over_sigma_bar2(params, solve_stationary_f(params, 0.0, n), "psi")


def chi(params: ModelParams, theta: float, n: int = 1000) -> Density:
    """Stationary density of the price mod one during a meta-order."""
    return _over_sigma_bar2(params, solve_stationary_f(params, theta, n), "chi")


def wing(density: Density) -> float:
    """Value at x = 1 by quadratic extrapolation from the last three interior
    nodes, avoiding endpoint discretization bias of grid-evolved densities."""
    v = density.values
    return float(v[-4] - 3.0 * v[-3] + 3.0 * v[-2])


def fp_time_step(params: ModelParams, theta: float, n: int) -> float:
    """Maximal admissible explicit step for the forward/backward sweeps."""
    p = params.with_theta(theta) if theta > 0 else params
    dx = 1.0 / n
    xi = (np.arange(n) + 0.5) * dx
    s2 = np.asarray(sigma_hat(p, np.arange(n) * dx)) ** 2
    mu = np.asarray(mu1_hat(p, xi))
    return _CFL_SAFETY * min(dx * dx / s2.max(), dx / np.abs(mu).max())


def transient_fp(
    params: ModelParams,
    theta: float,
    initial: Density,
    times,
    dt: float | None = None,
) -> list[Density]:
    """Evolve an initial density forward under the in-order dynamics.

    Conservative explicit finite-volume scheme on the periodic unit cell;
    drift evaluated at cell interfaces, diffusion at nodes.  Returns density
    snapshots at the requested times (each rounded to a whole step).
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < 0) or np.any(np.diff(times) < 0):
        raise ValueError("times must be nonnegative and nondecreasing")
    n = initial.n
    dx = 1.0 / n
    p = params.with_theta(theta)
    dt_max = fp_time_step(params, theta, n) / _CFL_SAFETY
    if dt is None:
        dt = _CFL_SAFETY * dt_max
    elif dt > dt_max:
        raise CflError(dt, dt_max)

    xg = np.arange(n) * dx
    a_int = np.asarray(mu1_hat(p, xg + 0.5 * dx))
    s2 = np.asarray(sigma_hat(p, xg)) ** 2
    steps = np.rint(times / dt).astype(np.int64)
    snaps = _kernels.fp_sweep(initial.values[:n].copy(), a_int, s2, dx, dt, steps)
    out = []
    for t, row in zip(times, snaps):
        vals = np.append(row, row[0])
        out.append(Density(x=initial.x, values=vals, kind="transient", theta=theta, time=float(t)))
    return out


def dtheta_f_at_zero(params: ModelParams, n: int = 1000) -> tuple[Density, float]:
    """Sensitivity g = d f / d theta at theta = 0, and its boundary value.

    Uses the first integral of the linearized ODE: with M = int 2*mu_bar0,
    g = e^M [c2 + A + 2 c1 J],  A(x) = int_0^x e^-M * 2*mu_bar1*f(0,.),
    and (c1, c2) solve the periodic value match g(0) = g(1) together with
    the zero weighted integral of g / sigma_bar^2.
    """
    x, f0, M, J, sb2 = _first_integral_solution(params, 0.0, n)
    E = np.exp(M)
    mb1 = np.asarray(mu_bar1(params, x))
    A = cumulative_simpson(np.exp(-M) * 2.0 * mb1 * f0, x=x, initial=0.0)

    # rows: periodicity  E1*(c2 + A1 + 2 c1 J1) = c2 ;  weighted integral = 0
    lhs = np.array(
        [
            [2.0 * E[-1] * J[-1], E[-1] - E[0]],
            [simpson(E * 2.0 * J / sb2, x=x), simpson(E / sb2, x=x)],
        ]
    )
    rhs = np.array([-E[-1] * A[-1], -simpson(E * A / sb2, x=x)])
    if np.linalg.cond(lhs) > _COND_LIMIT:
        raise DegenerateParametersError(
            f"sensitivity 2x2 system is near-singular (cond={np.linalg.cond(lhs):.2e})"
        )
    c1, c2 = np.linalg.solve(lhs, rhs)
    g = E * (c2 + A + 2.0 * c1 * J)
    return Density(x=x, values=g, kind="g", theta=0.0), float(g[-1])
