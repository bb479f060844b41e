"""Benchmark the numba kernels against their pure-numpy fallbacks.

Runs the two hot loops (fixed-step RK4 moment propagation, windowed
Pearson correlation) on a few problem sizes and prints a timing table
plus the max deviation between the two implementations.  Needs the
default environment (OSCNET_NUMBA unset or truthy); with the flag off
only the numpy path exists and there is nothing to compare.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time
from itertools import combinations

import numpy as np

from oscnet import _kernels


def best_of(func, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = func()
        best = min(best, time.perf_counter() - t0)
    return best, out


def rk4_inputs(n_modes, n_store, n_sub, seed):
    rng = np.random.default_rng(seed)
    omega = rng.uniform(0.8, 1.8, n_modes)
    gamma = rng.uniform(0.005, 0.1, n_modes)
    temperature = 10.0
    diffusion = gamma * omega / np.tanh(omega / (2.0 * temperature))
    cov0 = np.zeros((n_modes, n_modes, 2, 2))
    idx = np.arange(n_modes)
    cov0[idx, idx, 0, 0] = 0.5 / omega
    cov0[idx, idx, 1, 1] = 0.5 * omega
    mq0 = rng.normal(0.0, 2.0, n_modes)
    mp0 = np.zeros(n_modes)
    h_sub = np.full(n_store - 1, 0.05)
    counts = np.full(n_store - 1, n_sub, dtype=np.int64)
    return (mq0, mp0, cov0, gamma, omega**2,
            diffusion / (2.0 * omega**2), diffusion / 2.0, h_sub, counts)


def pearson_inputs(n_t, n_series, seed):
    rng = np.random.default_rng(seed)
    series = np.cumsum(rng.normal(size=(n_t, n_series)), axis=0)
    pairs = np.array(list(combinations(range(n_series), 2)), dtype=np.int64)
    return series, 50, pairs


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5,
                        help="timing repetitions per case (best is reported)")
    args = parser.parse_args()

    if not _kernels.NUMBA_ENABLED:
        raise SystemExit("OSCNET_NUMBA is off; only the numpy path is available")

    # compile outside the timed region
    _kernels._evolve_rk4_numba(*rk4_inputs(3, 4, 2, seed=0))
    _kernels._pearson_numba(*pearson_inputs(80, 3, seed=0))

    rows = []
    for n_modes in (5, 10, 20):
        inputs = rk4_inputs(n_modes, n_store=201, n_sub=10, seed=n_modes)
        t_np, out_np = best_of(lambda: _kernels._evolve_rk4_numpy(*inputs), args.repeat)
        t_nb, out_nb = best_of(lambda: _kernels._evolve_rk4_numba(*inputs), args.repeat)
        dev = max(float(np.abs(a - b).max()) for a, b in zip(out_np, out_nb))
        rows.append((f"rk4 evolve, {n_modes} modes x 2000 steps", t_np, t_nb, dev))

    for n_t, n_series in ((2000, 6), (8000, 10)):
        series, window, pairs = pearson_inputs(n_t, n_series, seed=n_t)
        t_np, out_np = best_of(
            lambda: _kernels._pearson_numpy(series, window, pairs), args.repeat)
        t_nb, out_nb = best_of(
            lambda: _kernels._pearson_numba(series, window, pairs), args.repeat)
        dev = float(np.nanmax(np.abs(out_np - out_nb)))
        rows.append(
            (f"pearson, {n_t} samples x {pairs.shape[0]} pairs", t_np, t_nb, dev))

    width = max(len(r[0]) for r in rows)
    print(f"{'case':<{width}}  {'numpy':>9}  {'numba':>9}  {'speedup':>7}  max|diff|")
    for name, t_np, t_nb, dev in rows:
        print(f"{name:<{width}}  {t_np * 1e3:7.2f}ms  {t_nb * 1e3:7.2f}ms"
              f"  {t_np / t_nb:6.1f}x  {dev:.2e}")


if __name__ == "__main__":
    main()
