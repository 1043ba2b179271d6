# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot loops: Euler-Maruyama steppers, the finite-activity market
loop, and the explicit PDE sweeps.

Every function consumes pre-drawn randomness and plain coefficient tables so
that the pure-numpy backend can reproduce its output bit for bit.  Tables
hold m+1 nodal values on [0, 1]; lookups interpolate linearly at y mod 1,
with the top node carrying the left limit at 1.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport ceil, floor, sqrt

cnp.import_array()


cdef inline double _lookup(const double[::1] tab, double y) nogil:
    cdef Py_ssize_t m = tab.shape[0] - 1
    cdef double u = y - floor(y)
    cdef double t = u * m
    cdef Py_ssize_t k = <Py_ssize_t> t
    if k >= m:
        k = m - 1
    cdef double f = t - k
    return tab[k] + f * (tab[k + 1] - tab[k])


def em_path(const double[::1] mu_tab, const double[::1] sig_tab,
            double x0, double dv, const double[::1] z):
    """One Euler-Maruyama path on the real line; returns all n+1 samples."""
    cdef Py_ssize_t n = z.shape[0]
    out = np.empty(n + 1, dtype=np.float64)
    cdef double[::1] path = out
    cdef double x = x0
    cdef double sqdv = sqrt(dv)
    cdef Py_ssize_t i
    path[0] = x
    with nogil:
        for i in range(n):
            x = x + _lookup(mu_tab, x) * dv + _lookup(sig_tab, x) * sqdv * z[i]
            path[i + 1] = x
    return out


def em_paths_terminal(const double[::1] mu_tab, const double[::1] sig_tab,
                      const double[::1] x0, double dv,
                      const double[:, ::1] z):
    """Terminal values of P independent paths advanced n equal steps."""
    cdef Py_ssize_t P = z.shape[0]
    cdef Py_ssize_t n = z.shape[1]
    out = np.empty(P, dtype=np.float64)
    cdef double[::1] xs = out
    cdef double sqdv = sqrt(dv)
    cdef double x
    cdef Py_ssize_t p, i
    with nogil:
        for p in range(P):
            x = x0[p]
            for i in range(n):
                x = x + _lookup(mu_tab, x) * dv + _lookup(sig_tab, x) * sqdv * z[p, i]
            xs[p] = x
    return out


def finite_market(double x0, double jump, const double[::1] sig_tab,
                  const long long[::1] nsub, const double[::1] sqh,
                  const double[::1] z, const double[::1] xi):
    """Finite-activity market with directions read off the offset draw xi.

    Segment i (i < len(xi)) diffuses over nsub[i] sub-steps with per-step
    noise scale sqh[i], then processes arrival i: buy iff xi >= ceil(x) - x,
    sell iff xi <= floor(x) - x, and the price jumps by +-jump on a trade.
    A trailing segment (len(nsub) == len(xi) + 1) diffuses to the horizon.

    Returns (x_pre, side, x_final): price just before each arrival, the
    trade mark in {+1, -1, 0}, and the terminal price.
    """
    cdef Py_ssize_t m = xi.shape[0]
    xpre_arr = np.empty(m, dtype=np.float64)
    side_arr = np.empty(m, dtype=np.int8)
    cdef double[::1] xpre = xpre_arr
    cdef signed char[::1] side = side_arr
    cdef double x = x0
    cdef double s
    cdef Py_ssize_t i, k, idx = 0
    cdef Py_ssize_t nseg = nsub.shape[0]
    with nogil:
        for i in range(nseg):
            s = sqh[i]
            for k in range(nsub[i]):
                x = x + _lookup(sig_tab, x) * s * z[idx]
                idx += 1
            if i < m:
                xpre[i] = x
                if xi[i] >= ceil(x) - x:
                    side[i] = 1
                    x = x + jump
                elif xi[i] <= floor(x) - x:
                    side[i] = -1
                    x = x - jump
                else:
                    side[i] = 0
    return xpre_arr, side_arr, x


def finite_market_zeta(double x0, double jump, const double[::1] sig_tab,
                       const double[::1] fp_tab, const double[::1] fm_tab,
                       const long long[::1] nsub, const double[::1] sqh,
                       const double[::1] z, const double[::1] xi,
                       const double[::1] v):
    """Finite-activity market in the multi-agent decomposition.

    A trade occurs iff xi falls outside (floor(x)-x, ceil(x)-x); its
    direction is drawn from the per-agent direction law via the uniform v:
    buy with probability F(-beta+) / (F(-beta+) + F(beta-)).
    """
    cdef Py_ssize_t m = xi.shape[0]
    xpre_arr = np.empty(m, dtype=np.float64)
    side_arr = np.empty(m, dtype=np.int8)
    cdef double[::1] xpre = xpre_arr
    cdef signed char[::1] side = side_arr
    cdef double x = x0
    cdef double s, fp, fm
    cdef Py_ssize_t i, k, idx = 0
    cdef Py_ssize_t nseg = nsub.shape[0]
    with nogil:
        for i in range(nseg):
            s = sqh[i]
            for k in range(nsub[i]):
                x = x + _lookup(sig_tab, x) * s * z[idx]
                idx += 1
            if i < m:
                xpre[i] = x
                if xi[i] >= ceil(x) - x or xi[i] <= floor(x) - x:
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
    return xpre_arr, side_arr, x


def backward_ceiling_sweep(const double[::1] v0, const double[::1] mu,
                           const double[::1] sig2, double dx, double dt,
                           const long long[::1] snap_steps):
    """Explicit Euler march of v_s = mu v_x + sig2/2 v_xx on the unit cell.

    Quasi-periodic identification v(x+1) = v(x) + 1: the ghost nodes are
    v[-1] = v[n-1] - 1 and v[n] = v[0] + 1.  Centered differences in space
    (stable here: the diffusion number dominates the cell Peclet number).
    Snapshots are recorded after the step counts in snap_steps (ascending).
    """
    cdef Py_ssize_t n = v0.shape[0]
    cdef Py_ssize_t S = snap_steps.shape[0]
    snaps = np.empty((S, n), dtype=np.float64)
    cdef double[:, ::1] out = snaps
    cur_arr = np.array(v0, dtype=np.float64, copy=True)
    nxt_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] cur = cur_arr
    cdef double[::1] nxt = nxt_arr
    cdef double[::1] tmp
    cdef double adv, dif, vl, vr
    cdef double cdif = 0.5 * dt / (dx * dx)
    cdef double cadv = 0.5 * dt / dx
    cdef Py_ssize_t j, s_i = 0, step = 0
    cdef long long nsteps = snap_steps[S - 1] if S > 0 else 0
    with nogil:
        while s_i < S and snap_steps[s_i] == 0:
            with gil:
                snaps[s_i, :] = cur_arr
            s_i += 1
        for step in range(1, nsteps + 1):
            for j in range(n):
                vl = cur[j - 1] if j > 0 else cur[n - 1] - 1.0
                vr = cur[j + 1] if j < n - 1 else cur[0] + 1.0
                dif = sig2[j] * (vr - 2.0 * cur[j] + vl)
                adv = mu[j] * (vr - vl)
                nxt[j] = cur[j] + cadv * adv + cdif * dif
            tmp = cur
            cur = nxt
            nxt = tmp
            if s_i < S and step == snap_steps[s_i]:
                with gil:
                    for j in range(n):
                        out[s_i, j] = cur[j]
                s_i += 1
    return snaps


def fp_sweep(const double[::1] u0, const double[::1] a_int,
             const double[::1] sig2, double dx, double dt,
             const long long[::1] snap_steps):
    """Conservative explicit finite-volume march of the forward equation
    u_t = (sig2 u / 2)_xx - (mu u)_x on the periodic unit cell.

    a_int[j] is the drift evaluated at the interface (j + 1/2) * dx, so a
    drift discontinuity at the integer never straddles an interface; sig2
    is nodal (it is continuous across integers).  Centered fluxes, exact
    mass conservation, second order in space; positivity holds whenever
    the cell Peclet number |mu| dx / sig2 stays below 2.
    """
    cdef Py_ssize_t n = u0.shape[0]
    cdef Py_ssize_t S = snap_steps.shape[0]
    snaps = np.empty((S, n), dtype=np.float64)
    cdef double[:, ::1] out = snaps
    cur_arr = np.array(u0, dtype=np.float64, copy=True)
    flux_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] cur = cur_arr
    cdef double[::1] flux = flux_arr
    cdef double fl
    cdef double cdt = dt / dx
    cdef double hdx = 0.5 / dx
    cdef Py_ssize_t j, jr, s_i = 0
    cdef long long step
    cdef long long nsteps = snap_steps[S - 1] if S > 0 else 0
    with nogil:
        while s_i < S and snap_steps[s_i] == 0:
            with gil:
                snaps[s_i, :] = cur_arr
            s_i += 1
        for step in range(1, nsteps + 1):
            for j in range(n):
                jr = j + 1 if j < n - 1 else 0
                fl = a_int[j] * (0.5 * (cur[j] + cur[jr]))
                flux[j] = fl - hdx * (sig2[jr] * cur[jr] - sig2[j] * cur[j])
            for j in range(n):
                cur[j] = cur[j] - cdt * (flux[j] - flux[j - 1 if j > 0 else n - 1])
            if s_i < S and step == snap_steps[s_i]:
                with gil:
                    for j in range(n):
                        out[s_i, j] = cur[j]
                s_i += 1
    return snaps
