"""Cross-backend equality: the compiled kernels and the pure-numpy fallback
must produce bit-identical results on identical inputs."""

import numpy as np
import pytest

from impactlab import _kernels

try:
    compiled = _kernels.get_backend("compiled")
except ImportError:  # pragma: no cover
    compiled = None
python = _kernels.get_backend("python")

pytestmark = pytest.mark.skipif(compiled is None, reason="compiled backend unavailable")


@pytest.fixture(scope="module")
def rng():
    return np.random.default_rng(99)


def table(rng, m=4097):
    return np.ascontiguousarray(rng.normal(1.0, 0.2, m))


def test_em_path_identical(rng):
    mu = table(rng)
    sig = np.abs(table(rng)) + 0.5
    z = rng.standard_normal(5000)
    a = compiled.em_path(mu, sig, 0.37, 1e-3, z)
    b = python.em_path(mu, sig, 0.37, 1e-3, z)
    assert np.array_equal(np.asarray(a), np.asarray(b))


def test_em_paths_terminal_identical(rng):
    mu = table(rng)
    sig = np.abs(table(rng)) + 0.5
    z = rng.standard_normal((64, 300))
    x0 = np.ascontiguousarray(rng.random(64))
    a = compiled.em_paths_terminal(mu, sig, x0, 2e-3, z)
    b = python.em_paths_terminal(mu, sig, x0, 2e-3, z)
    assert np.array_equal(np.asarray(a), np.asarray(b))


def test_finite_market_identical(rng):
    sig = np.abs(table(rng)) + 0.5
    m = 2000
    nsub = rng.integers(1, 5, m + 1).astype(np.int64)
    sqh = np.sqrt(rng.random(m + 1) * 1e-3)
    z = rng.standard_normal(int(nsub.sum()))
    xi = rng.uniform(-1.2, 1.2, m)
    a = compiled.finite_market(0.5, 0.01, sig, nsub, sqh, z, xi)
    b = python.finite_market(0.5, 0.01, sig, nsub, sqh, z, xi)
    for u, v in zip(a, b):
        assert np.array_equal(np.asarray(u), np.asarray(v))


def test_finite_market_zeta_identical(rng):
    sig = np.abs(table(rng)) + 0.5
    fp = np.ascontiguousarray(np.linspace(0.05, 0.45, 4097))
    fm = np.ascontiguousarray(np.linspace(0.45, 0.05, 4097))
    m = 2000
    nsub = rng.integers(1, 5, m + 1).astype(np.int64)
    sqh = np.sqrt(rng.random(m + 1) * 1e-3)
    z = rng.standard_normal(int(nsub.sum()))
    xi = rng.uniform(-1.2, 1.2, m)
    v = rng.random(m)
    a = compiled.finite_market_zeta(0.5, 0.01, sig, fp, fm, nsub, sqh, z, xi, v)
    b = python.finite_market_zeta(0.5, 0.01, sig, fp, fm, nsub, sqh, z, xi, v)
    for u, w in zip(a, b):
        assert np.array_equal(np.asarray(u), np.asarray(w))


def test_backward_sweep_identical(rng):
    n = 200
    v0 = np.ones(n)
    v0[0] = 0.0
    mu = np.ascontiguousarray(rng.normal(0.0, 3.0, n))
    sig2 = np.ascontiguousarray(rng.random(n) + 1.0)
    dx = 1.0 / n
    dt = 0.5 * dx * dx / sig2.max()
    steps = np.array([0, 50, 200], dtype=np.int64)
    a = compiled.backward_ceiling_sweep(v0.copy(), mu, sig2, dx, dt, steps)
    b = python.backward_ceiling_sweep(v0.copy(), mu, sig2, dx, dt, steps)
    assert np.array_equal(np.asarray(a), np.asarray(b))


def test_fp_sweep_identical(rng):
    n = 200
    u0 = np.ascontiguousarray(1.0 + 0.3 * np.sin(2 * np.pi * np.arange(n) / n))
    a_int = np.ascontiguousarray(rng.normal(0.0, 3.0, n))
    sig2 = np.ascontiguousarray(rng.random(n) + 1.0)
    dx = 1.0 / n
    dt = 0.4 * dx * dx / sig2.max()
    steps = np.array([0, 100, 400], dtype=np.int64)
    a = compiled.fp_sweep(u0.copy(), a_int, sig2, dx, dt, steps)
    b = python.fp_sweep(u0.copy(), a_int, sig2, dx, dt, steps)
    assert np.array_equal(np.asarray(a), np.asarray(b))


def test_default_backend_is_compiled():
    assert _kernels.backend_name == "compiled"
