"""Numba kernels: Sturm-sequence eigenvalue bisection and Metropolis sweeps.

Everything here is deterministic given its inputs; randomness enters only
through the pre-drawn uniform buffers passed to the sweep kernels (one draw
is consumed per proposal, accepted or not, so the stream position depends
only on the number of proposals).
"""

from __future__ import annotations

import numpy as np
from numba import njit

_SAFMIN = 2.2250738585072014e-308  # smallest normal double


@njit(cache=True, nogil=True)
def sturm_count(diag, off2, x, pivmin):
    """Number of eigenvalues below x, via the Sturm pivot recurrence."""
    count = 0
    q = diag[0] - x
    if q < 0.0:
        count = 1
    for i in range(1, diag.shape[0]):
        if -pivmin < q < pivmin:
            q = -pivmin
        q = (diag[i] - x) - off2[i - 1] / q
        if q < 0.0:
            count += 1
    return count


@njit(cache=True, nogil=True)
def _kth_eigenvalue(diag, off2, k, lo, hi, pivmin, tol):
    # invariant: count(lo) <= k < count(hi)
    for _ in range(300):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if sturm_count(diag, off2, mid, pivmin) >= k + 1:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@njit(cache=True, nogil=True)
def lowest_two(diag, off):
    """Two smallest eigenvalues of a symmetric tridiagonal matrix."""
    m = diag.shape[0]
    off2 = np.empty(m - 1)
    e2max = 0.0
    for i in range(m - 1):
        off2[i] = off[i] * off[i]
        if off2[i] > e2max:
            e2max = off2[i]
    lo = diag[0]
    hi = diag[0]
    for i in range(m):
        r = 0.0
        if i > 0:
            r += abs(off[i - 1])
        if i < m - 1:
            r += abs(off[i])
        if diag[i] - r < lo:
            lo = diag[i] - r
        if diag[i] + r > hi:
            hi = diag[i] + r
    span = hi - lo
    if span <= 0.0:
        return diag[0], diag[0]
    pad = 1e-12 * span
    lo -= pad
    hi += pad
    pivmin = _SAFMIN * max(e2max, 1.0)
    tol = 1e-16 * span
    e0 = _kth_eigenvalue(diag, off2, 0, lo, hi, pivmin, tol)
    e1 = _kth_eigenvalue(diag, off2, 1, lo, hi, pivmin, tol)
    if e1 < e0:
        e0, e1 = e1, e0
    return e0, e1


@njit(cache=True, nogil=True)
def metropolis_sweep(bits, weights, fvals, acc, uniforms, coef_diag, log_tanh_a, s1_mode):
    """One raster sweep of single-bit proposals over the (T, n) lattice.

    acc[0] accumulates sum_tau f(w_tau), acc[1] the number of unequal
    periodic links, acc[2] the accepted-flip count; all three must be
    coherent with the lattice on entry and stay so on exit.  coef_diag is
    beta*s/T.  At s=1 (s1_mode) link changes are resolved in the a -> 0+
    limit: creating unequal links is rejected outright, removing them is
    accepted outright, and a flip that leaves the unequal-link count
    unchanged falls back to the diagonal-only Metropolis rule.

    Acceptance is min(1, exp(dlog)) except for exact ties (dlog == 0),
    which are taken with probability 1/2.  At s=0 every proposal that
    shifts a domain wall is such a tie; accepting ties deterministically
    would turn the raster scan into a near-deterministic front-propagating
    automaton whose sweep chain is reducible (the target distribution stays
    stationary but is no longer reached from most starting states).  The
    half-probability tie rule keeps detailed balance and restores
    irreducibility.
    """
    T, n = bits.shape
    u = 0
    for tau in range(T):
        taum = T - 1 if tau == 0 else tau - 1
        taup = 0 if tau == T - 1 else tau + 1
        w = weights[tau]
        for d in range(n):
            b = bits[tau, d]
            wnew = w - 1 if b == 1 else w + 1
            df = fvals[wnew] - fvals[w]
            link_delta = 0
            if bits[taum, d] == b:
                link_delta += 1
            else:
                link_delta -= 1
            if bits[taup, d] == b:
                link_delta += 1
            else:
                link_delta -= 1
            if s1_mode:
                if link_delta > 0:
                    ok = False
                elif link_delta < 0:
                    ok = True
                else:
                    dlog = -coef_diag * df
                    if dlog > 0.0:
                        ok = True
                    elif dlog == 0.0:
                        ok = uniforms[u] < 0.5
                    else:
                        ok = uniforms[u] < np.exp(dlog)
            else:
                dlog = -coef_diag * df + log_tanh_a * link_delta
                if dlog > 0.0:
                    ok = True
                elif dlog == 0.0:
                    ok = uniforms[u] < 0.5
                else:
                    ok = uniforms[u] < np.exp(dlog)
            u += 1
            if ok:
                bits[tau, d] = 1 - b
                acc[0] += df
                acc[1] += link_delta
                acc[2] += 1.0
                w = wnew
        weights[tau] = w


@njit(cache=True, nogil=True)
def sweep_batch(bits, weights, fvals, acc, uniforms, n_sweeps,
                coef_diag, log_tanh_a, s1_mode,
                ed_const, ed_scale, eo_equal, eo_unequal,
                energies, accepts, configs, record_configs):
    """Run n_sweeps raster sweeps, recording per-sweep energy and acceptances.

    energies[k] is the post-sweep estimate ed_const + ed_scale*sum_f
    + eo_equal*(n*T - U) + eo_unequal*U.  When record_configs is set the
    post-sweep lattice is packed into configs[k] (requires n*T <= 62).
    """
    T, n = bits.shape
    nT = float(n * T)
    stride = n * T
    for k in range(n_sweeps):
        before = acc[2]
        metropolis_sweep(bits, weights, fvals, acc,
                         uniforms[k * stride:(k + 1) * stride],
                         coef_diag, log_tanh_a, s1_mode)
        accepts[k] = np.int64(acc[2] - before)
        energies[k] = ed_const + ed_scale * acc[0] + eo_equal * (nT - acc[1]) + eo_unequal * acc[1]
        if record_configs:
            packed = np.int64(0)
            for tau in range(T):
                for d in range(n):
                    if bits[tau, d] == 1:
                        packed |= np.int64(1) << np.int64(tau * n + d)
            configs[k] = packed
