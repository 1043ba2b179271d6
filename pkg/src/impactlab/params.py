"""Model parameters, coefficient formulas, and assumption validation.

All prices are measured in ticks, all rates on the volume (business) clock.
The mod-1 domain is [0, 1); coefficient values at integer points are the
right limits, so every formula below may be evaluated on the closed
interval [0, 1] (the value at 1 is the left limit used by the solvers).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicHermiteSpline, PchipInterpolator

__all__ = [
    "CdfSpec",
    "SigmaSpec",
    "ModelParams",
    "AssumptionCheck",
    "AssumptionReport",
    "beta_plus",
    "beta_minus",
    "mu0_hat",
    "mu1_hat",
    "sigma_hat",
    "mu_bar0",
    "mu_bar1",
    "sigma_bar",
    "validate_assumptions",
    "load_params",
]

_CHECK_GRID = 2001
_CHECK_TOL = 1e-9


def beta_plus(x):
    """Distance from x up to the next integer: ceil(x) - x. Zero at integers."""
    x = np.asarray(x, dtype=float)
    return np.ceil(x) - x


def beta_minus(x):
    """Signed distance from x down to the previous integer: floor(x) - x."""
    x = np.asarray(x, dtype=float)
    return np.floor(x) - x


@dataclass(frozen=True)
class CdfSpec:
    """CDF of the idiosyncratic reservation-price offset on [-1, 1].

    Two kinds: ``uniform`` (symmetric uniform on [-a, a], half-width a > 1,
    in ticks) and ``tabulated`` (monotone interpolation of sampled values).
    Tabulated values are interpolated with a cubic Hermite spline when
    derivative values are supplied, and with a monotone PCHIP otherwise,
    so monotonicity of the data is preserved.
    """

    kind: str
    a: float | None = None
    nodes: np.ndarray | None = None
    values: np.ndarray | None = None
    derivs: np.ndarray | None = None

    @classmethod
    def uniform(cls, a: float) -> "CdfSpec":
        if not a > 1.0:
            raise ValueError(f"uniform CDF requires half-width a > 1, got a={a}")
        return cls(kind="uniform", a=float(a))

    @classmethod
    def tabulated(cls, nodes, values, derivs=None) -> "CdfSpec":
        nodes = np.asarray(nodes, dtype=float)
        values = np.asarray(values, dtype=float)
        if nodes.ndim != 1 or nodes.shape != values.shape or nodes.size < 4:
            raise ValueError("tabulated CDF needs matching 1-d nodes/values, >= 4 points")
        if nodes[0] > -1.0 or nodes[-1] < 1.0:
            raise ValueError("tabulated CDF nodes must cover [-1, 1]")
        if derivs is not None:
            derivs = np.asarray(derivs, dtype=float)
            if derivs.shape != nodes.shape:
                raise ValueError("derivative values must match nodes")
        return cls(kind="tabulated", nodes=nodes, values=values, derivs=derivs)

    def _interp(self):
        if self.derivs is not None:
            return CubicHermiteSpline(self.nodes, self.values, self.derivs)
        return PchipInterpolator(self.nodes, self.values)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "uniform":
            return np.clip((x + self.a) / (2.0 * self.a), 0.0, 1.0)
        return self._interp()(np.clip(x, self.nodes[0], self.nodes[-1]))

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "uniform":
            return np.where(np.abs(x) <= self.a, 1.0 / (2.0 * self.a), 0.0)
        return self._interp().derivative()(np.clip(x, self.nodes[0], self.nodes[-1]))


@dataclass(frozen=True)
class SigmaSpec:
    """Within-spread volatility of the fundamental price (ticks per sqrt time).

    ``assumption1`` encodes sigma(x) = rho * sqrt(gamma * (F(x-1) + F(-x)))
    with rho >= 1, under which the volume-clock volatility is the constant
    rho / sqrt(theta). ``tabulated`` interpolates values sampled on [0, 1]
    (period one; evaluation wraps mod 1).
    """

    kind: str
    rho: float | None = None
    nodes: np.ndarray | None = None
    values: np.ndarray | None = None

    @classmethod
    def assumption1(cls, rho: float) -> "SigmaSpec":
        if not rho >= 1.0:
            raise ValueError(f"assumption1 sigma requires rho >= 1, got rho={rho}")
        return cls(kind="assumption1", rho=float(rho))

    @classmethod
    def tabulated(cls, nodes, values) -> "SigmaSpec":
        nodes = np.asarray(nodes, dtype=float)
        values = np.asarray(values, dtype=float)
        if nodes.ndim != 1 or nodes.shape != values.shape or nodes.size < 4:
            raise ValueError("tabulated sigma needs matching 1-d nodes/values, >= 4 points")
        if nodes[0] > 0.0 or nodes[-1] < 1.0:
            raise ValueError("tabulated sigma nodes must cover [0, 1]")
        if np.min(values) <= 0.0:
            raise ValueError("tabulated sigma must be strictly positive")
        return cls(kind="tabulated", nodes=nodes, values=values)


@dataclass(frozen=True)
class ModelParams:
    """Inputs of the model.

    alpha: local-impact slope (ticks per unit volume), > 0.
    gamma: total arrival-rate intensity (volume per unit time), > 0.
    theta: participation rate of the executing agent, in (0, 1].
    F:     CDF of the reservation-price offsets.
    sigma: within-spread volatility specification.
    """

    alpha: float
    gamma: float
    theta: float
    F: CdfSpec
    sigma: SigmaSpec

    def __post_init__(self):
        if not self.alpha >= 0.0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if not self.gamma > 0.0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if not 0.0 < self.theta <= 1.0:
            raise ValueError(f"theta must lie in (0, 1], got {self.theta}")

    def with_theta(self, theta: float) -> "ModelParams":
        return dataclasses.replace(self, theta=theta)

    # -- within-spread volatility sigma(y), period one --------------------

    def sigma_fn(self, y):
        y = np.asarray(y, dtype=float)
        u = np.where(y == 1.0, 1.0, y - np.floor(y))  # sigma is continuous and 1-periodic
        if self.sigma.kind == "assumption1":
            s = self.F.cdf(u - 1.0) + self.F.cdf(-u)
            return self.sigma.rho * np.sqrt(self.gamma * s)
        return PchipInterpolator(self.sigma.nodes, self.sigma.values)(u)


def _arrival_split(params: ModelParams, y):
    """F(y-1), F(-y) for y in [0, 1]: buy- and sell-trigger probabilities."""
    y = np.asarray(y, dtype=float)
    return params.F.cdf(y - 1.0), params.F.cdf(-y)


def mu0_hat(params: ModelParams, y):
    """Volume-clock drift of the fundamental price with no meta-order."""
    if not params.theta > 0.0:
        raise ValueError("theta must be positive")
    fp, fm = _arrival_split(params, y)
    return params.alpha * (fp - fm) / (params.theta * (fp + fm))


def mu1_hat(params: ModelParams, y):
    """Volume-clock drift during a buy meta-order at participation theta."""
    if not params.theta > 0.0:
        raise ValueError("theta must be positive")
    fp, fm = _arrival_split(params, y)
    return params.alpha * (2.0 * params.theta * fm + fp - fm) / (params.theta * (fp + fm))


def sigma_hat(params: ModelParams, y):
    """Volume-clock volatility; equals rho / sqrt(theta) under assumption1."""
    if not params.theta > 0.0:
        raise ValueError("theta must be positive")
    fp, fm = _arrival_split(params, y)
    return params.sigma_fn(y) / np.sqrt(params.theta * params.gamma * (fp + fm))


def sigma_bar(params: ModelParams, y):
    """Theta-free rescaling sqrt(theta) * sigma_hat."""
    fp, fm = _arrival_split(params, y)
    return params.sigma_fn(y) / np.sqrt(params.gamma * (fp + fm))


def mu_bar0(params: ModelParams, y):
    """Rescaled no-order drift alpha*gamma*(F(y-1) - F(-y)) / sigma(y)^2."""
    fp, fm = _arrival_split(params, y)
    sig2 = np.asarray(params.sigma_fn(y)) ** 2
    return params.alpha * params.gamma * (fp - fm) / sig2


def mu_bar1(params: ModelParams, y):
    """Rescaled meta-order drift 2*alpha*gamma*F(-y) / sigma(y)^2."""
    _, fm = _arrival_split(params, y)
    sig2 = np.asarray(params.sigma_fn(y)) ** 2
    return 2.0 * params.alpha * params.gamma * fm / sig2


# ---------------------------------------------------------------------------
# assumption validation


@dataclass(frozen=True)
class AssumptionCheck:
    name: str
    passed: bool
    worst_x: float
    worst_value: float


@dataclass(frozen=True)
class AssumptionReport:
    checks: tuple[AssumptionCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> AssumptionCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def summary(self) -> str:
        lines = []
        for c in self.checks:
            status = "pass" if c.passed else "FAIL"
            lines.append(f"{status:4s}  {c.name}  (worst {c.worst_value:+.3e} at x={c.worst_x:.4f})")
        return "\n".join(lines)


def _worst(name, grid, violation, tol=_CHECK_TOL):
    """Check max violation <= tol; report the worst grid point."""
    i = int(np.argmax(violation))
    return AssumptionCheck(name, bool(violation[i] <= tol), float(grid[i]), float(violation[i]))


def validate_assumptions(params: ModelParams, n: int = _CHECK_GRID) -> AssumptionReport:
    """Grid check of the standing assumptions on F and sigma plus the two
    technical assumptions used for the concavity result.

    Log-concavity of F on [-1, 0] is tested through nonpositivity of the
    discrete second difference of log F, and monotonicity of F' through its
    discrete first difference.
    """
    checks = []
    xs = np.linspace(-1.0, 1.0, n)
    fx = params.F.cdf(xs)

    checks.append(_worst("F symmetry F(-x)+F(x)=1", xs, np.abs(fx + fx[::-1] - 1.0)))
    checks.append(_worst("F nondecreasing", xs[1:], -(np.diff(fx))))

    if params.F.kind == "uniform":
        a = params.F.a
        checks.append(AssumptionCheck("uniform half-width a > 1", a > 1.0, a, a - 1.0))

    ys = np.linspace(0.0, 1.0, n)
    fp, fm = _arrival_split(params, ys)
    arr = fp + fm
    i = int(np.argmin(arr))
    checks.append(
        AssumptionCheck("arrival rate inf F(x-1)+F(-x) > 0", bool(arr[i] > _CHECK_TOL), float(ys[i]), float(arr[i]))
    )

    sig = np.asarray(params.sigma_fn(ys))
    checks.append(_worst("sigma symmetric about 1/2", ys, np.abs(sig - sig[::-1])))
    i = int(np.argmin(sig))
    checks.append(AssumptionCheck("sigma strictly positive", bool(sig[i] > _CHECK_TOL), float(ys[i]), float(sig[i])))
    checks.append(
        AssumptionCheck("sigma period one", bool(abs(sig[0] - sig[-1]) <= 1e-6), 0.0, float(abs(sig[0] - sig[-1])))
    )

    if params.sigma.kind == "assumption1":
        rho = params.sigma.rho
        checks.append(AssumptionCheck("assumption 1 (rho >= 1)", rho >= 1.0, 0.0, rho - 1.0))
    else:
        ref = params.sigma.rho if params.sigma.rho is not None else 1.0
        implied = ref * np.sqrt(params.gamma * arr)
        checks.append(_worst("assumption 1 (tabulated sigma matches)", ys, np.abs(sig - implied), 1e-6))

    # Assumption 2 on [-1, 0]: shrink slightly away from -1 where F may vanish.
    zs = np.linspace(-1.0 + 2.0 / n, 0.0, n)
    fz = np.maximum(params.F.cdf(zs), 1e-300)
    h = zs[1] - zs[0]
    d2 = np.diff(np.log(fz), 2) / h**2
    checks.append(_worst("assumption 2: log F concave on [-1,0]", zs[1:-1], d2, 1e-6))
    fpz = params.F.pdf(zs)
    checks.append(_worst("assumption 2: F' nondecreasing on [-1,0]", zs[1:], -np.diff(fpz), 1e-6))

    return AssumptionReport(tuple(checks))


# ---------------------------------------------------------------------------
# config-file loading


def _read_table(path: Path) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise ValueError(f"{path}: expected a two-column CSV")
    return data[:, 0], data[:, 1]


def load_params(path: str | Path) -> ModelParams:
    """Read model parameters from a plain-text ``key = value`` config file.

    Recognized keys: alpha, gamma, theta, F.kind, F.a, F.table,
    sigma.kind, sigma.rho, sigma.table. Table paths are resolved relative
    to the config file. Lines starting with '#' are comments.
    """
    path = Path(path)
    kv: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, val = line.split("=", 1)
        kv[key.strip()] = val.strip()

    def need(key):
        if key not in kv:
            raise ValueError(f"{path}: missing required key {key!r}")
        return kv[key]

    fkind = need("F.kind")
    if fkind == "uniform":
        F = CdfSpec.uniform(float(need("F.a")))
    elif fkind == "tabulated":
        nodes, values = _read_table(path.parent / need("F.table"))
        F = CdfSpec.tabulated(nodes, values)
    else:
        raise ValueError(f"{path}: unknown F.kind {fkind!r}")

    skind = need("sigma.kind")
    if skind == "assumption1":
        sigma = SigmaSpec.assumption1(float(need("sigma.rho")))
    elif skind == "tabulated":
        nodes, values = _read_table(path.parent / need("sigma.table"))
        sigma = SigmaSpec.tabulated(nodes, values)
    else:
        raise ValueError(f"{path}: unknown sigma.kind {skind!r}")

    return ModelParams(
        alpha=float(need("alpha")),
        gamma=float(need("gamma")),
        theta=float(need("theta")),
        F=F,
        sigma=sigma,
    )
