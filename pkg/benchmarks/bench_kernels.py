"""Timing comparison of the compiled kernels against the pure-numpy fallback.

Run with:  python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from impactlab._kernels import get_backend


def timeit(fn, *args, repeat=5):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    rng = np.random.default_rng(7)
    mu = np.ascontiguousarray(rng.normal(1.0, 0.2, 4097))
    sig = np.ascontiguousarray(np.abs(rng.normal(1.0, 0.2, 4097)) + 0.5)

    cases = []

    z_path = rng.standard_normal(2_000_000)
    cases.append(("em_path (2e6 steps)", "em_path", (mu, sig, 0.4, 1e-4, z_path)))

    z_batch = rng.standard_normal((2000, 1000))
    x0 = np.ascontiguousarray(rng.random(2000))
    cases.append(
        ("em_paths_terminal (2000x1000)", "em_paths_terminal", (mu, sig, x0, 1e-3, z_batch))
    )

    m = 200_000
    nsub = rng.integers(1, 4, m + 1).astype(np.int64)
    sqh = np.sqrt(rng.random(m + 1) * 1e-3)
    zf = rng.standard_normal(int(nsub.sum()))
    xi = rng.uniform(-1.2, 1.2, m)
    cases.append(("finite_market (2e5 arrivals)", "finite_market", (0.5, 0.01, sig, nsub, sqh, zf, xi)))

    fp = np.ascontiguousarray(np.linspace(0.05, 0.45, 4097))
    fm = np.ascontiguousarray(fp[::-1])
    v = rng.random(m)
    cases.append(
        ("finite_market_zeta (2e5 arrivals)", "finite_market_zeta",
         (0.5, 0.01, sig, fp, fm, nsub, sqh, zf, xi, v))
    )

    n = 400
    v0 = np.ones(n)
    v0[0] = 0.0
    mu_n = np.ascontiguousarray(rng.normal(0.0, 5.0, n))
    sig2_n = np.ascontiguousarray(rng.random(n) + 1.0)
    dx = 1.0 / n
    dt = 0.4 * dx * dx / sig2_n.max()
    steps = np.array([20_000], dtype=np.int64)
    cases.append(
        ("backward_ceiling_sweep (400x2e4)", "backward_ceiling_sweep",
         (v0, mu_n, sig2_n, dx, dt, steps))
    )
    u0 = np.ascontiguousarray(1.0 + 0.3 * np.sin(2 * np.pi * np.arange(n) / n))
    cases.append(("fp_sweep (400x2e4)", "fp_sweep", (u0, mu_n, sig2_n, dx, dt, steps)))

    compiled = get_backend("compiled")
    python = get_backend("python")
    print(f"{'kernel':36s} {'compiled':>10s} {'python':>10s} {'speedup':>8s}  identical")
    for label, name, args in cases:
        tc, rc = timeit(getattr(compiled, name), *(np.copy(a) if isinstance(a, np.ndarray) else a for a in args))
        tp, rp = timeit(getattr(python, name), *(np.copy(a) if isinstance(a, np.ndarray) else a for a in args))
        if isinstance(rc, tuple):
            same = all(np.array_equal(np.asarray(u), np.asarray(w)) for u, w in zip(rc, rp))
        else:
            same = np.array_equal(np.asarray(rc), np.asarray(rp))
        print(f"{label:36s} {tc * 1e3:9.1f}ms {tp * 1e3:9.1f}ms {tp / tc:7.1f}x  {same}")


if __name__ == "__main__":
    main()
