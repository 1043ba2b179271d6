"""Pure-numpy fallback for the compiled kernels.

Matches the compiled extension bit for bit: identical arithmetic, identical
operation order per element.  Only the PDE sweeps and the batched stepper are
vectorized; the sequential single-path loops run in plain Python and are
correspondingly slow (see benchmarks/bench_kernels.py).
"""

import math

import numpy as np


def _lookup(tab, y):
    m = tab.shape[0] - 1
    u = y - math.floor(y)
    t = u * m
    k = int(t)
    if k >= m:
        k = m - 1
    f = t - k
    return tab[k] + f * (tab[k + 1] - tab[k])


def _lookup_vec(tab, y):
    m = tab.shape[0] - 1
    u = y - np.floor(y)
    t = u * m
    k = np.minimum(t.astype(np.int64), m - 1)
    f = t - k
    return tab[k] + f * (tab[k + 1] - tab[k])


def em_path(mu_tab, sig_tab, x0, dv, z):
    """One Euler-Maruyama path on the real line; returns all n+1 samples."""
    n = z.shape[0]
    path = np.empty(n + 1, dtype=np.float64)
    x = float(x0)
    sqdv = math.sqrt(dv)
    path[0] = x
    for i in range(n):
        x = x + _lookup(mu_tab, x) * dv + _lookup(sig_tab, x) * sqdv * z[i]
        path[i + 1] = x
    return path


def em_paths_terminal(mu_tab, sig_tab, x0, dv, z):
    """Terminal values of P independent paths advanced n equal steps."""
    n = z.shape[1]
    x = np.array(x0, dtype=np.float64, copy=True)
    sqdv = math.sqrt(dv)
    for i in range(n):
        x = x + _lookup_vec(mu_tab, x) * dv + _lookup_vec(sig_tab, x) * sqdv * z[:, i]
    return x


def finite_market(x0, jump, sig_tab, nsub, sqh, z, xi):
    """Finite-activity market with directions read off the offset draw xi."""
    m = xi.shape[0]
    xpre = np.empty(m, dtype=np.float64)
    side = np.empty(m, dtype=np.int8)
    x = float(x0)
    idx = 0
    for i in range(nsub.shape[0]):
        s = sqh[i]
        for _ in range(nsub[i]):
            x = x + _lookup(sig_tab, x) * s * z[idx]
            idx += 1
        if i < m:
            xpre[i] = x
            if xi[i] >= math.ceil(x) - x:
                side[i] = 1
                x = x + jump
            elif xi[i] <= math.floor(x) - x:
                side[i] = -1
                x = x - jump
            else:
                side[i] = 0
    return xpre, side, x


def finite_market_zeta(x0, jump, sig_tab, fp_tab, fm_tab, nsub, sqh, z, xi, v):
    """Finite-activity market in the multi-agent decomposition."""
    m = xi.shape[0]
    xpre = np.empty(m, dtype=np.float64)
    side = np.empty(m, dtype=np.int8)
    x = float(x0)
    idx = 0
    for i in range(nsub.shape[0]):
        s = sqh[i]
        for _ in range(nsub[i]):
            x = x + _lookup(sig_tab, x) * s * z[idx]
            idx += 1
        if i < m:
            xpre[i] = x
            if xi[i] >= math.ceil(x) - x or xi[i] <= math.floor(x) - x:
                fp = _lookup(fp_tab, x)
                fm = _lookup(fm_tab, x)
                if v[i] < fp / (fp + fm):
                    side[i] = 1
                    x = x + jump
                else:
                    side[i] = -1
                    x = x - jump
            else:
                side[i] = 0
    return xpre, side, x


def backward_ceiling_sweep(v0, mu, sig2, dx, dt, snap_steps):
    """Explicit Euler march of v_s = mu v_x + sig2/2 v_xx on the unit cell
    with the quasi-periodic identification v(x+1) = v(x) + 1."""
    n = v0.shape[0]
    S = snap_steps.shape[0]
    snaps = np.empty((S, n), dtype=np.float64)
    cur = np.array(v0, dtype=np.float64, copy=True)
    cdif = 0.5 * dt / (dx * dx)
    cadv = 0.5 * dt / dx
    vl = np.empty(n)
    vr = np.empty(n)
    s_i = 0
    while s_i < S and snap_steps[s_i] == 0:
        snaps[s_i, :] = cur
        s_i += 1
    nsteps = int(snap_steps[-1]) if S > 0 else 0
    for step in range(1, nsteps + 1):
        vl[1:] = cur[:-1]
        vl[0] = cur[n - 1] - 1.0
        vr[:-1] = cur[1:]
        vr[n - 1] = cur[0] + 1.0
        dif = sig2 * (vr - 2.0 * cur + vl)
        adv = mu * (vr - vl)
        cur = cur + cadv * adv + cdif * dif
        if s_i < S and step == snap_steps[s_i]:
            snaps[s_i, :] = cur
            s_i += 1
    return snaps


def fp_sweep(u0, a_int, sig2, dx, dt, snap_steps):
    """Conservative explicit finite-volume march of the forward equation
    u_t = (sig2 u / 2)_xx - (mu u)_x on the periodic unit cell, with
    centered fluxes and interface-evaluated drift a_int."""
    n = u0.shape[0]
    S = snap_steps.shape[0]
    snaps = np.empty((S, n), dtype=np.float64)
    cur = np.array(u0, dtype=np.float64, copy=True)
    cdt = dt / dx
    hdx = 0.5 / dx
    s2r = np.roll(sig2, -1)
    a = np.asarray(a_int, dtype=np.float64)
    s_i = 0
    while s_i < S and snap_steps[s_i] == 0:
        snaps[s_i, :] = cur
        s_i += 1
    nsteps = int(snap_steps[-1]) if S > 0 else 0
    for step in range(1, nsteps + 1):
        ur = np.roll(cur, -1)
        fl = a * (0.5 * (cur + ur))
        flux = fl - hdx * (s2r * ur - sig2 * cur)
        cur = cur - cdt * (flux - np.roll(flux, 1))
        if s_i < S and step == snap_steps[s_i]:
            snaps[s_i, :] = cur
            s_i += 1
    return snaps
