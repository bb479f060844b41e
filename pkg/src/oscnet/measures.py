"""Synchronization and quantum-correlation measures on Gaussian data.

Classical side: Pearson correlation over sliding half-open windows
[t, t + window) of a uniformly sampled trajectory, and the collective
synchronization factor S(t), the product of |C| over node pairs applied
to the second moments <q_j^2>.

Quantum side: two-mode measures evaluated on 4x4 pair covariances in
quadrature order (x_i, x_j, p_i, p_j): von Neumann mutual information,
logarithmic negativity from the partial-transpose symplectic invariants,
and Gaussian discord, where the conditional entropy is minimized over
all single-mode Gaussian measurements sigma_M(s, theta).  The discord
minimizer uses a deterministic zoomed grid over (s, theta), optionally
polished with Nelder-Mead; a batched variant serves whole trajectories.

Vacuum variance is 1/2 throughout, so a symplectic eigenvalue below 1/2
signals an unphysical covariance.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
import scipy.optimize
from scipy.special import xlogy

from . import _kernels
from .errors import DimensionMismatch, UnphysicalCovariance
from .network import NetworkSpec, hamiltonian_matrix

#: Minimum number of samples a correlation window must span.
MIN_WINDOW_SAMPLES = 10

#: Slack on the vacuum bound when validating covariances.
PHYSICALITY_TOL = 1e-8

#: Negative values of discord within this tolerance are clamped to zero.
DISCORD_CLAMP_TOL = 1e-9

MUTUAL_INFORMATION = "mutual_information"
DISCORD = "discord"
LOG_NEGATIVITY = "log_negativity"


# ---------------------------------------------------------------------------
# Symplectic spectra and entropies
# ---------------------------------------------------------------------------

def symplectic_form(n: int) -> np.ndarray:
    """The 2n x 2n form J = [[0, I], [-I, 0]] in (x..., p...) ordering."""
    j = np.zeros((2 * n, 2 * n))
    j[:n, n:] = np.eye(n)
    j[n:, :n] = -np.eye(n)
    return j


def symplectic_spectrum(cov: np.ndarray) -> np.ndarray:
    """Symplectic eigenvalues, ascending; supports batched (..., 2n, 2n) input.

    For positive-definite input the spectrum is read off the singular
    values of L^T J L with cov = L L^T: that matrix is antisymmetric, so
    its singular values are the moduli of its eigenvalues (each appearing
    twice) and the SVD cannot fail to converge.  Indefinite input (seen by
    the physicality guards) falls back to the eigenvalues of J cov; both
    routes average the +/- pairs to suppress roundoff splitting.
    """
    cov = np.asarray(cov, dtype=float)
    n2 = cov.shape[-1]
    if n2 % 2 != 0 or cov.shape[-2] != n2:
        raise DimensionMismatch("covariance must be square with even dimension")
    j = symplectic_form(n2 // 2)
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        lam = np.linalg.eigvals(j @ cov)
        mods = np.sort(np.abs(lam), axis=-1)
        return 0.5 * (mods[..., 0::2] + mods[..., 1::2])
    skew = np.swapaxes(chol, -1, -2) @ j @ chol
    sv = np.linalg.svd(skew, compute_uv=False)
    return (0.5 * (sv[..., 0::2] + sv[..., 1::2]))[..., ::-1]


def _entropy_term(nu: np.ndarray) -> np.ndarray:
    nu = np.maximum(nu, 0.5)
    return xlogy(nu + 0.5, nu + 0.5) - xlogy(nu - 0.5, nu - 0.5)


def von_neumann_entropy(cov: np.ndarray) -> float | np.ndarray:
    """Entropy (nats) of a Gaussian state from its symplectic spectrum."""
    nus = symplectic_spectrum(cov)
    if np.any(nus < 0.5 - PHYSICALITY_TOL):
        raise UnphysicalCovariance(
            f"symplectic eigenvalue {nus.min():.6g} below the vacuum floor 1/2"
        )
    out = _entropy_term(nus).sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def purity(cov: np.ndarray) -> float | np.ndarray:
    """Tr rho^2 = 1 / (2^n sqrt(det cov)); 1 for pure states."""
    cov = np.asarray(cov, dtype=float)
    n = cov.shape[-1] // 2
    det = np.linalg.det(cov)
    if np.any(det <= 0.0):
        raise UnphysicalCovariance("covariance has non-positive determinant")
    out = 1.0 / (2.0**n * np.sqrt(det))
    return float(out) if out.ndim == 0 else out


def energy(state, net: NetworkSpec) -> float:
    """Mean energy <H> including first moments; state must be node-basis."""
    if state.basis != "node":
        raise ValueError("energy expects a node-basis state")
    n = net.n
    if state.n != n:
        raise DimensionMismatch(f"state has {state.n} nodes, network has {n}")
    ham = hamiltonian_matrix(net)
    mq = state.mean[:n]
    mp = state.mean[n:]
    cov = state.cov
    return 0.5 * float(
        np.trace(cov[n:, n:]) + mp @ mp + mq @ ham @ mq + np.sum(ham * cov[:n, :n])
    )


# ---------------------------------------------------------------------------
# Windowed correlation and the collective factor
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WindowedSeries:
    """A sliding-window statistic: value[k] covers [times[k], times[k] + window)."""

    times: np.ndarray
    values: np.ndarray
    window: float
    samples: int
    degenerate: np.ndarray

    def __len__(self) -> int:
        return self.times.shape[0]


def _window_samples(times: np.ndarray, window: float) -> tuple[int, float]:
    times = np.asarray(times, dtype=float)
    dts = np.diff(times)
    dt = dts[0]
    if not np.allclose(dts, dt, rtol=1e-9, atol=0.0):
        raise ValueError("windowed statistics need a uniform time grid")
    samples = int(round(window / dt))
    if samples < MIN_WINDOW_SAMPLES:
        raise ValueError(
            f"window {window:.6g} spans {samples} samples; need at least {MIN_WINDOW_SAMPLES}"
        )
    if samples > times.shape[0]:
        raise ValueError("window is longer than the sampled series")
    return samples, samples * dt


def windowed_correlation(times, f, g, window: float) -> WindowedSeries:
    """Pearson C(t) of two series over sliding windows of the given length.

    Windows with zero variance in either series yield NaN and are marked
    in the ``degenerate`` mask.
    """
    times = np.asarray(times, dtype=float)
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != times.shape or g.shape != times.shape:
        raise DimensionMismatch("series must match the time grid")
    samples, actual = _window_samples(times, window)
    series = np.stack([f, g], axis=1)
    pairs = np.array([[0, 1]], dtype=np.int64)
    values = _kernels.windowed_pearson(series, samples, pairs)[:, 0]
    degenerate = np.isnan(values)
    return WindowedSeries(
        times=times[: values.shape[0]].copy(),
        values=values,
        window=actual,
        samples=samples,
        degenerate=degenerate,
    )


def collective_sync(traj, window: float, subset=None) -> WindowedSeries:
    """S(t): product over node pairs of |C| applied to the <q_j^2> series.

    ``subset`` restricts to the given node indices (default: all nodes).
    Any degenerate pair window makes S(t) NaN there, with the mask set.
    """
    signal = traj.second_moment_q
    nodes = np.arange(traj.n) if subset is None else np.asarray(subset, dtype=np.int64)
    if nodes.shape[0] < 2:
        raise ValueError("collective synchronization needs at least two nodes")
    if np.unique(nodes).shape[0] != nodes.shape[0]:
        raise ValueError("subset contains repeated nodes")
    samples, actual = _window_samples(traj.times, window)
    pairs = np.array(list(combinations(range(nodes.shape[0]), 2)), dtype=np.int64)
    corr = _kernels.windowed_pearson(
        np.ascontiguousarray(signal[:, nodes]), samples, pairs
    )
    values = np.abs(corr).prod(axis=1)
    degenerate = np.isnan(corr).any(axis=1)
    return WindowedSeries(
        times=traj.times[: values.shape[0]].copy(),
        values=values,
        window=actual,
        samples=samples,
        degenerate=degenerate,
    )


# ---------------------------------------------------------------------------
# Two-mode measures on 4x4 pair covariances
# ---------------------------------------------------------------------------

def pair_covariance(cov: np.ndarray, i: int, j: int, n: int) -> np.ndarray:
    """Extract the (x_i, x_j, p_i, p_j) covariance from a (2n, 2n) matrix.

    Works on batched (..., 2n, 2n) input.
    """
    if i == j:
        raise ValueError("pair needs two distinct nodes")
    idx = np.array([i, j, n + i, n + j])
    return np.asarray(cov)[..., idx[:, None], idx[None, :]]


def _det2(m: np.ndarray) -> np.ndarray:
    return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]


def _pair_blocks(cov4):
    cov4 = np.asarray(cov4, dtype=float)
    if cov4.shape[-2:] != (4, 4):
        raise DimensionMismatch("expected a two-mode covariance of shape (..., 4, 4)")
    a_idx = np.array([0, 2])
    b_idx = np.array([1, 3])
    a = cov4[..., a_idx[:, None], a_idx[None, :]]
    b = cov4[..., b_idx[:, None], b_idx[None, :]]
    c = cov4[..., a_idx[:, None], b_idx[None, :]]
    return a, b, c


def _pair_nus(cov4):
    """Symplectic pair (nu_minus, nu_plus) of a two-mode covariance.

    Computed from the spectrum of J sigma rather than the textbook
    two-mode invariants: the invariant route cancels catastrophically
    for near-pure pairs (the discriminant is a difference of fourth
    powers of the squeezing scale) and its sqrt(eps)-level noise is
    enough to trip the physicality gate.
    """
    cov4 = np.asarray(cov4, dtype=float)
    if cov4.shape[-2:] != (4, 4):
        raise DimensionMismatch("expected a two-mode covariance of shape (..., 4, 4)")
    nus = symplectic_spectrum(cov4)
    return nus[..., 0], nus[..., 1]


def _check_pair_physical(cov4):
    nu_minus, _ = _pair_nus(cov4)
    bad = nu_minus < 0.5 - PHYSICALITY_TOL
    if np.any(bad):
        raise UnphysicalCovariance(
            f"two-mode symplectic eigenvalue {np.min(nu_minus):.6g} below 1/2"
        )


def mutual_information(cov4) -> float | np.ndarray:
    """I = S(A) + S(B) - S(AB) in nats; batched over leading axes."""
    _check_pair_physical(cov4)
    a, b, _ = _pair_blocks(cov4)
    nu_minus, nu_plus = _pair_nus(cov4)
    out = (
        _entropy_term(np.sqrt(np.maximum(_det2(a), 0.25)))
        + _entropy_term(np.sqrt(np.maximum(_det2(b), 0.25)))
        - _entropy_term(nu_minus)
        - _entropy_term(nu_plus)
    )
    out = np.maximum(out, 0.0)
    return float(out) if out.ndim == 0 else out


def log_negativity(cov4) -> float | np.ndarray:
    """E_N = max(0, -ln 2 nu~_minus) with nu~ from the partial transpose.

    Transposing the second mode negates its momentum row and column; the
    smallest symplectic eigenvalue of the flipped covariance then sets
    the entanglement (same stability argument as :func:`_pair_nus`).
    """
    _check_pair_physical(cov4)
    flipped = np.array(cov4, dtype=float, copy=True)
    flipped[..., 3, :] *= -1.0
    flipped[..., :, 3] *= -1.0
    nu_t = symplectic_spectrum(flipped)[..., 0]
    out = np.maximum(-np.log(2.0 * nu_t), 0.0)
    return float(out) if out.ndim == 0 else out


def _measurement_matrices(s: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """sigma_M(s, theta) = R diag(e^{2s}, e^{-2s}) R^T / 2, batched."""
    cos = np.cos(theta)
    sin = np.sin(theta)
    hi = 0.5 * np.exp(2.0 * s)
    lo = 0.5 * np.exp(-2.0 * s)
    m = np.empty(np.broadcast(s, theta).shape + (2, 2))
    m[..., 0, 0] = hi * cos**2 + lo * sin**2
    m[..., 1, 1] = hi * sin**2 + lo * cos**2
    m[..., 0, 1] = (hi - lo) * cos * sin
    m[..., 1, 0] = m[..., 0, 1]
    return m


def _conditional_det(a, b, c, sig_m):
    """det of A - C (B + sigma_M)^-1 C^T, batched over states x grid."""
    m = b + sig_m
    det_m = _det2(m)
    inv = np.empty_like(m)
    inv[..., 0, 0] = m[..., 1, 1]
    inv[..., 1, 1] = m[..., 0, 0]
    inv[..., 0, 1] = -m[..., 0, 1]
    inv[..., 1, 0] = -m[..., 1, 0]
    inv = inv / det_m[..., None, None]
    cond = a - c @ inv @ np.swapaxes(c, -1, -2)
    return _det2(cond)


_GRID_S = np.linspace(-7.0, 7.0, 29)
_GRID_THETA = np.linspace(0.0, np.pi, 24, endpoint=False)
_ZOOM_LEVELS = 5
_ZOOM_POINTS = 9


def _min_conditional_det(a, b, c):
    """Deterministic zoomed-grid minimum of the conditional determinant.

    a, b, c: batched (..., 2, 2) pair blocks.  Returns (det_min, s, theta)
    arrays of the batch shape.
    """
    batch = a.shape[:-2]
    a_ = a.reshape((-1, 1, 2, 2))
    b_ = b.reshape((-1, 1, 2, 2))
    c_ = c.reshape((-1, 1, 2, 2))
    m = a_.shape[0]

    s_grid, t_grid = np.meshgrid(_GRID_S, _GRID_THETA, indexing="ij")
    s_flat = np.broadcast_to(s_grid.ravel(), (m, s_grid.size))
    t_flat = np.broadcast_to(t_grid.ravel(), (m, t_grid.size))
    sig = _measurement_matrices(s_flat, t_flat)
    dets = _conditional_det(a_, b_, c_, sig)
    pick = np.argmin(dets, axis=1)
    best_det = dets[np.arange(m), pick]
    best_s = s_flat[np.arange(m), pick]
    best_t = t_flat[np.arange(m), pick]
    span_s = _GRID_S[1] - _GRID_S[0]
    span_t = _GRID_THETA[1] - _GRID_THETA[0]

    for _ in range(_ZOOM_LEVELS):
        offs = np.linspace(-1.0, 1.0, _ZOOM_POINTS)
        s_loc = best_s[:, None, None] + span_s * offs[None, :, None]
        t_loc = best_t[:, None, None] + span_t * offs[None, None, :]
        s_loc, t_loc = np.broadcast_arrays(s_loc, t_loc)
        s_flat = s_loc.reshape(m, -1)
        t_flat = t_loc.reshape(m, -1)
        sig = _measurement_matrices(s_flat, t_flat)
        dets = _conditional_det(a_, b_, c_, sig)
        pick = np.argmin(dets, axis=1)
        best_det = np.minimum(best_det, dets[np.arange(m), pick])
        best_s = s_flat[np.arange(m), pick]
        best_t = t_flat[np.arange(m), pick]
        span_s *= 2.0 / (_ZOOM_POINTS - 1)
        span_t *= 2.0 / (_ZOOM_POINTS - 1)

    return best_det.reshape(batch), best_s.reshape(batch), best_t.reshape(batch)


def _discord_from_blocks(a, b, c):
    """Discord of A given Gaussian measurements on B, batched."""
    cov4 = np.zeros(a.shape[:-2] + (4, 4))
    a_idx = np.array([0, 2])
    b_idx = np.array([1, 3])
    cov4[..., a_idx[:, None], a_idx[None, :]] = a
    cov4[..., b_idx[:, None], b_idx[None, :]] = b
    cov4[..., a_idx[:, None], b_idx[None, :]] = c
    cov4[..., b_idx[:, None], a_idx[None, :]] = np.swapaxes(c, -1, -2)
    info = mutual_information(cov4)
    det_min, _, _ = _min_conditional_det(a, b, c)
    s_a = _entropy_term(np.sqrt(np.maximum(_det2(a), 0.25)))
    cond = _entropy_term(np.sqrt(np.maximum(det_min, 0.25)))
    holevo = s_a - cond
    disc = np.asarray(info - holevo)
    if np.any(disc < -DISCORD_CLAMP_TOL):
        raise UnphysicalCovariance(
            f"discord came out {np.min(disc):.3g} < 0 beyond tolerance"
        )
    return np.maximum(disc, 0.0)


def gaussian_discord(cov4, measured: str = "B", refine: bool = True) -> float:
    """Gaussian quantum discord of a two-mode covariance.

    ``measured`` names the mode the Gaussian measurement acts on ("B",
    the second mode, by default).  The measurement minimization runs on
    a deterministic zoomed grid; with ``refine`` a Nelder-Mead polish is
    applied on top.  Small negative results (roundoff) clamp to zero.
    """
    cov4 = np.asarray(cov4, dtype=float)
    if cov4.ndim != 2:
        raise DimensionMismatch("gaussian_discord is scalar; use pair_measure_series for batches")
    _check_pair_physical(cov4)
    a, b, c = _pair_blocks(cov4)
    if measured == "A":
        a, b, c = b, a, np.swapaxes(c, -1, -2)
    elif measured != "B":
        raise ValueError("measured side must be 'A' or 'B'")

    det_min, s0, t0 = _min_conditional_det(a, b, c)
    if refine:
        def objective(x):
            sig = _measurement_matrices(np.array(x[0]), np.array(x[1]))
            return float(_conditional_det(a, b, c, sig))

        res = scipy.optimize.minimize(
            objective,
            np.array([s0, t0]),
            method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-15, "maxiter": 400},
        )
        det_min = min(float(det_min), float(res.fun))

    # Mutual information is symmetric in the two modes, so no swap here.
    info = mutual_information(cov4)
    s_a = float(_entropy_term(np.sqrt(max(float(_det2(a)), 0.25))))
    cond = float(_entropy_term(np.sqrt(max(det_min, 0.25))))
    disc = float(info) - (s_a - cond)
    if disc < -DISCORD_CLAMP_TOL:
        raise UnphysicalCovariance(f"discord came out {disc:.3g} < 0 beyond tolerance")
    return max(disc, 0.0)


# ---------------------------------------------------------------------------
# Trajectory-level aggregation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PairSeries:
    """One measure evaluated per stored time and node pair."""

    times: np.ndarray
    pairs: tuple[tuple[int, int], ...]
    values: np.ndarray
    excluded: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class AveragedSeries:
    """Pair-averaged measure, moving-average filtered over the window."""

    times: np.ndarray
    values: np.ndarray
    window: float
    samples: int
    excluded: tuple[tuple[int, int], ...]


def _all_pairs(n: int) -> tuple[tuple[int, int], ...]:
    return tuple(combinations(range(n), 2))


def pair_measure_series(
    traj,
    measure: str,
    pairs=None,
    stride: int = 1,
    discord_measured: str = "B",
) -> PairSeries:
    """Evaluate one two-mode measure on every (time, pair) of a trajectory.

    Pairs whose covariance fails the physicality floor anywhere in the
    series are dropped and reported in ``excluded`` (NaN-filled columns).
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    pair_list = _all_pairs(traj.n) if pairs is None else [tuple(p) for p in pairs]
    times = traj.times[::stride]
    covs = traj.covs[::stride]
    values = np.full((times.shape[0], len(pair_list)), np.nan)
    excluded = []
    for k, (i, j) in enumerate(pair_list):
        cov4 = pair_covariance(covs, i, j, traj.n)
        nu_minus, _ = _pair_nus(cov4)
        if np.any(nu_minus < 0.5 - PHYSICALITY_TOL):
            excluded.append((i, j))
            continue
        if measure == MUTUAL_INFORMATION:
            values[:, k] = mutual_information(cov4)
        elif measure == LOG_NEGATIVITY:
            values[:, k] = log_negativity(cov4)
        elif measure == DISCORD:
            a, b, c = _pair_blocks(cov4)
            if discord_measured == "A":
                a, b, c = b, a, np.swapaxes(c, -1, -2)
            values[:, k] = _discord_from_blocks(a, b, c)
        else:
            raise ValueError(f"unknown measure {measure!r}")
    return PairSeries(
        times=times.copy(),
        pairs=tuple(pair_list),
        values=values,
        excluded=tuple(excluded),
    )


def pairwise_average(
    traj,
    measure: str,
    window: float,
    pairs=None,
    stride: int = 1,
    discord_measured: str = "B",
) -> AveragedSeries:
    """Mean of a two-mode measure over node pairs, then moving-averaged.

    The moving average uses the same half-open window convention as the
    correlation measures, applied on the (possibly strided) grid.
    """
    series = pair_measure_series(traj, measure, pairs, stride, discord_measured)
    keep = [k for k, p in enumerate(series.pairs) if p not in set(series.excluded)]
    if not keep:
        raise UnphysicalCovariance("every pair was excluded as unphysical")
    avg = series.values[:, keep].mean(axis=1)
    dts = np.diff(series.times)
    dt = dts[0]
    if not np.allclose(dts, dt, rtol=1e-9, atol=0.0):
        raise ValueError("moving average needs a uniform time grid")
    samples = max(1, int(round(window / dt)))
    if samples > avg.shape[0]:
        raise ValueError("window is longer than the sampled series")
    csum = np.concatenate([[0.0], np.cumsum(avg)])
    smoothed = (csum[samples:] - csum[:-samples]) / samples
    return AveragedSeries(
        times=series.times[: smoothed.shape[0]].copy(),
        values=smoothed,
        window=samples * dt,
        samples=samples,
        excluded=series.excluded,
    )
