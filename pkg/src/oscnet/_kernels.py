"""Hot numeric kernels: numba-jitted loops with pure-numpy fallbacks.

Two inner loops dominate runtime: fixed-step RK4 propagation of the
mode-basis Gaussian moments, and windowed Pearson correlation over all
node pairs.  Both exist in two functionally equivalent versions:

- explicit loops compiled with ``numba.njit`` (default), and
- a vectorized pure-numpy fallback.

Selection happens once at import time via the environment variable
``OSCNET_NUMBA``: set it to ``0``/``false``/``off`` to force the numpy
path (useful on platforms without numba, or for benchmarking; see
``benchmarks/bench_kernels.py``).  Both versions implement the same
arithmetic and agree to tight floating-point tolerance; each is fully
deterministic.

State layout used by the evolution kernels: per-mode means ``mq``/``mp``
of shape (N,), and the full mode-basis covariance as an (N, N, 2, 2)
block array, ``cov[m, n] = [[QmQn, QmPn], [PmQn, PmPn]]``.  Mode m drifts
with ``[[-G_m/2, 1], [-W_m^2, -G_m/2]]`` and diffusion enters the
diagonal blocks only, at rate ``d2q``/``d2p`` per unit time on the
q/p variance.
"""

from __future__ import annotations

import os

import numpy as np


def _flag_enabled() -> bool:
    value = os.environ.get("OSCNET_NUMBA", "1").strip().lower()
    return value not in ("0", "false", "off", "no")


NUMBA_ENABLED = False
if _flag_enabled():
    try:
        from numba import njit

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a hard dependency
        NUMBA_ENABLED = False


# ---------------------------------------------------------------------------
# RK4 evolution of mode-basis moments
# ---------------------------------------------------------------------------

def _moment_deriv_numpy(mq, mp, cov, gamma, omega2, d2q, d2p):
    """Time derivative of means and covariance blocks (vectorized)."""
    dmq = -0.5 * gamma * mq + mp
    dmp = -omega2 * mq - 0.5 * gamma * mp
    g = 0.5 * gamma[:, None] + 0.5 * gamma[None, :]
    w2m = omega2[:, None, None]
    w2n = omega2[None, :, None]
    a = cov[:, :, 0, 0]
    b = cov[:, :, 0, 1]
    c = cov[:, :, 1, 0]
    d = cov[:, :, 1, 1]
    dcov = np.empty_like(cov)
    dcov[:, :, 0, 0] = -g * a + b + c
    dcov[:, :, 0, 1] = -g * b + d - w2n[:, :, 0] * a
    dcov[:, :, 1, 0] = -g * c + d - w2m[:, :, 0] * a
    dcov[:, :, 1, 1] = -g * d - w2m[:, :, 0] * b - w2n[:, :, 0] * c
    idx = np.arange(mq.shape[0])
    dcov[idx, idx, 0, 0] += d2q
    dcov[idx, idx, 1, 1] += d2p
    return dmq, dmp, dcov


def _evolve_rk4_numpy(mq0, mp0, cov0, gamma, omega2, d2q, d2p, h_sub, n_sub):
    """RK4 over a stored grid; interval i uses n_sub[i] steps of h_sub[i]."""
    n_store = h_sub.shape[0] + 1
    n_modes = mq0.shape[0]
    out_mq = np.empty((n_store, n_modes))
    out_mp = np.empty((n_store, n_modes))
    out_cov = np.empty((n_store, n_modes, n_modes, 2, 2))
    mq, mp, cov = mq0.copy(), mp0.copy(), cov0.copy()
    out_mq[0], out_mp[0], out_cov[0] = mq, mp, cov
    for i in range(n_store - 1):
        h = h_sub[i]
        for _ in range(n_sub[i]):
            k1q, k1p, k1c = _moment_deriv_numpy(mq, mp, cov, gamma, omega2, d2q, d2p)
            k2q, k2p, k2c = _moment_deriv_numpy(
                mq + 0.5 * h * k1q, mp + 0.5 * h * k1p, cov + 0.5 * h * k1c,
                gamma, omega2, d2q, d2p,
            )
            k3q, k3p, k3c = _moment_deriv_numpy(
                mq + 0.5 * h * k2q, mp + 0.5 * h * k2p, cov + 0.5 * h * k2c,
                gamma, omega2, d2q, d2p,
            )
            k4q, k4p, k4c = _moment_deriv_numpy(
                mq + h * k3q, mp + h * k3p, cov + h * k3c,
                gamma, omega2, d2q, d2p,
            )
            w = h / 6.0
            mq = mq + w * ((k1q + k4q) + 2.0 * (k2q + k3q))
            mp = mp + w * ((k1p + k4p) + 2.0 * (k2p + k3p))
            cov = cov + w * ((k1c + k4c) + 2.0 * (k2c + k3c))
        out_mq[i + 1], out_mp[i + 1], out_cov[i + 1] = mq, mp, cov
    return out_mq, out_mp, out_cov


def _moment_deriv_loops(mq, mp, cov, gamma, omega2, d2q, d2p, dmq, dmp, dcov):
    n_modes = mq.shape[0]
    for m in range(n_modes):
        dmq[m] = -0.5 * gamma[m] * mq[m] + mp[m]
        dmp[m] = -omega2[m] * mq[m] - 0.5 * gamma[m] * mp[m]
    for m in range(n_modes):
        gm = 0.5 * gamma[m]
        w2m = omega2[m]
        for n in range(n_modes):
            g = gm + 0.5 * gamma[n]
            w2n = omega2[n]
            a = cov[m, n, 0, 0]
            b = cov[m, n, 0, 1]
            c = cov[m, n, 1, 0]
            d = cov[m, n, 1, 1]
            dcov[m, n, 0, 0] = -g * a + b + c
            dcov[m, n, 0, 1] = -g * b + d - w2n * a
            dcov[m, n, 1, 0] = -g * c + d - w2m * a
            dcov[m, n, 1, 1] = -g * d - w2m * b - w2n * c
        dcov[m, m, 0, 0] += d2q[m]
        dcov[m, m, 1, 1] += d2p[m]


def _evolve_rk4_loops(mq0, mp0, cov0, gamma, omega2, d2q, d2p, h_sub, n_sub):
    n_store = h_sub.shape[0] + 1
    n_modes = mq0.shape[0]
    out_mq = np.empty((n_store, n_modes))
    out_mp = np.empty((n_store, n_modes))
    out_cov = np.empty((n_store, n_modes, n_modes, 2, 2))
    mq = mq0.copy()
    mp = mp0.copy()
    cov = cov0.copy()
    out_mq[0] = mq
    out_mp[0] = mp
    out_cov[0] = cov

    k1q = np.empty(n_modes); k1p = np.empty(n_modes)
    k2q = np.empty(n_modes); k2p = np.empty(n_modes)
    k3q = np.empty(n_modes); k3p = np.empty(n_modes)
    k4q = np.empty(n_modes); k4p = np.empty(n_modes)
    tq = np.empty(n_modes); tp = np.empty(n_modes)
    shape = (n_modes, n_modes, 2, 2)
    k1c = np.empty(shape); k2c = np.empty(shape)
    k3c = np.empty(shape); k4c = np.empty(shape)
    tc = np.empty(shape)

    flat_cov = cov.reshape(-1)
    flat_tc = tc.reshape(-1)
    flat_k1c = k1c.reshape(-1)
    flat_k2c = k2c.reshape(-1)
    flat_k3c = k3c.reshape(-1)
    flat_k4c = k4c.reshape(-1)
    n_flat = flat_cov.shape[0]

    for i in range(n_store - 1):
        h = h_sub[i]
        for _ in range(n_sub[i]):
            _moment_deriv_loops(mq, mp, cov, gamma, omega2, d2q, d2p, k1q, k1p, k1c)
            for m in range(n_modes):
                tq[m] = mq[m] + 0.5 * h * k1q[m]
                tp[m] = mp[m] + 0.5 * h * k1p[m]
            for r in range(n_flat):
                flat_tc[r] = flat_cov[r] + 0.5 * h * flat_k1c[r]
            _moment_deriv_loops(tq, tp, tc, gamma, omega2, d2q, d2p, k2q, k2p, k2c)
            for m in range(n_modes):
                tq[m] = mq[m] + 0.5 * h * k2q[m]
                tp[m] = mp[m] + 0.5 * h * k2p[m]
            for r in range(n_flat):
                flat_tc[r] = flat_cov[r] + 0.5 * h * flat_k2c[r]
            _moment_deriv_loops(tq, tp, tc, gamma, omega2, d2q, d2p, k3q, k3p, k3c)
            for m in range(n_modes):
                tq[m] = mq[m] + h * k3q[m]
                tp[m] = mp[m] + h * k3p[m]
            for r in range(n_flat):
                flat_tc[r] = flat_cov[r] + h * flat_k3c[r]
            _moment_deriv_loops(tq, tp, tc, gamma, omega2, d2q, d2p, k4q, k4p, k4c)
            w = h / 6.0
            for m in range(n_modes):
                mq[m] = mq[m] + w * ((k1q[m] + k4q[m]) + 2.0 * (k2q[m] + k3q[m]))
                mp[m] = mp[m] + w * ((k1p[m] + k4p[m]) + 2.0 * (k2p[m] + k3p[m]))
            for r in range(n_flat):
                flat_cov[r] = flat_cov[r] + w * ((flat_k1c[r] + flat_k4c[r]) + 2.0 * (flat_k2c[r] + flat_k3c[r]))
        out_mq[i + 1] = mq
        out_mp[i + 1] = mp
        out_cov[i + 1] = cov
    return out_mq, out_mp, out_cov


# ---------------------------------------------------------------------------
# Windowed Pearson correlation over series pairs
# ---------------------------------------------------------------------------

def _pearson_numpy(series, window, pairs):
    """Correlation over sliding half-open windows of `window` samples.

    series: (T, K) float array; pairs: (P, 2) int array of column indices.
    Returns (T - window + 1, P); windows with zero variance give NaN.
    """
    n_t = series.shape[0]
    n_win = n_t - window + 1
    shifted = series - series.mean(axis=0)  # conditioning only; C is shift-invariant
    zeros = np.zeros((1, shifted.shape[1]))
    cs = np.concatenate([zeros, np.cumsum(shifted, axis=0)])
    cs2 = np.concatenate([zeros, np.cumsum(shifted * shifted, axis=0)])
    s1 = cs[window:] - cs[:-window]
    s2 = cs2[window:] - cs2[:-window]
    var = s2 - s1 * s1 / window
    out = np.full((n_win, pairs.shape[0]), np.nan)
    for ip, (i, j) in enumerate(pairs):
        prod = shifted[:, i] * shifted[:, j]
        csp = np.concatenate([[0.0], np.cumsum(prod)])
        sxy = (csp[window:] - csp[:-window]) - s1[:, i] * s1[:, j] / window
        denom = var[:, i] * var[:, j]
        ok = (var[:, i] > 0.0) & (var[:, j] > 0.0)
        out[ok, ip] = sxy[ok] / np.sqrt(denom[ok])
    np.clip(out, -1.0, 1.0, out=out)
    return out


def _pearson_loops(series, window, pairs):
    n_t, n_series = series.shape
    n_pairs = pairs.shape[0]
    n_win = n_t - window + 1
    out = np.full((n_win, n_pairs), np.nan)
    means = np.empty(n_series)
    for t0 in range(n_win):
        for k in range(n_series):
            total = 0.0
            for t in range(t0, t0 + window):
                total += series[t, k]
            means[k] = total / window
        for ip in range(n_pairs):
            i = pairs[ip, 0]
            j = pairs[ip, 1]
            mi = means[i]
            mj = means[j]
            sxy = 0.0
            sxx = 0.0
            syy = 0.0
            for t in range(t0, t0 + window):
                dx = series[t, i] - mi
                dy = series[t, j] - mj
                sxy += dx * dy
                sxx += dx * dx
                syy += dy * dy
            if sxx > 0.0 and syy > 0.0:
                value = sxy / np.sqrt(sxx * syy)
                if value > 1.0:
                    value = 1.0
                elif value < -1.0:
                    value = -1.0
                out[t0, ip] = value
    return out


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------

if NUMBA_ENABLED:
    _moment_deriv_loops = njit(cache=True)(_moment_deriv_loops)
    _evolve_rk4_numba = njit(cache=True)(_evolve_rk4_loops)
    _pearson_numba = njit(cache=True)(_pearson_loops)
    evolve_rk4 = _evolve_rk4_numba
    windowed_pearson = _pearson_numba
else:
    evolve_rk4 = _evolve_rk4_numpy
    windowed_pearson = _pearson_numpy
