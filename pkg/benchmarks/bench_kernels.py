"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat N]

Both variants are imported directly, so the OTRLAB_BACKEND flag does not
matter here.  Outputs are compared before timing.
"""
import argparse
import time

import numpy as np

from otrlab import _accel, kernels
from otrlab.instance import derive_seed, get_preset, sample_sequence


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def simplex_case():
    # phase-two tableau for a random bounded LP: max c.x, A x <= b, x >= 0
    rng = np.random.default_rng(7)
    m, n = 60, 80
    A = rng.uniform(0.1, 1.0, (m, n))
    b = rng.uniform(5, 10, m)
    c = rng.uniform(0.5, 1.5, n)
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n : n + m] = np.eye(m)
    T[:m, -1] = b
    T[m, :n] = -c
    basis = np.arange(n, n + m, dtype=np.int64)
    return T, basis, n + m


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not _accel.HAVE_NUMBA:
        print("numba is not installed; only the numpy backend can be timed")

    preset = get_preset("highway")
    seq = sample_sequence(preset.profile, 2000, derive_seed(0, 0))
    tau, t, c = seq.tau_array, preset.network.t, preset.network.c
    small = sample_sequence(preset.profile, 9, derive_seed(0, 1))
    small_c = np.array([2, 2, 9], dtype=np.int64)
    T, basis, n_enter = simplex_case()

    cases = {
        "greedy_arcs (n=2000)": (
            lambda: kernels._greedy_arcs_nb(tau, t, c),
            lambda: kernels._greedy_arcs_np(tau, t, c),
        ),
        "bruteforce_arcs (n=9, M=3)": (
            lambda: kernels._bruteforce_arcs_nb(small.tau_array, small.theta_array, t, small_c),
            lambda: kernels._bruteforce_arcs_np(small.tau_array, small.theta_array, t, small_c),
        ),
        "hash_uniforms (n=1e6)": (
            lambda: kernels._hash_uniforms_nb(np.uint64(12345), 1_000_000),
            lambda: kernels._hash_uniforms_np(np.uint64(12345), 1_000_000),
        ),
        "simplex_iterate (60x140)": (
            lambda: kernels._simplex_iterate_nb(T.copy(), basis.copy(), n_enter, 10**6, 50, 1e-9),
            lambda: kernels._simplex_iterate_np(T.copy(), basis.copy(), n_enter, 10**6, 50, 1e-9),
        ),
    }

    print(f"{'kernel':30s} {'numba [ms]':>12s} {'numpy [ms]':>12s} {'speedup':>8s}")
    for name, (f_nb, f_np) in cases.items():
        r_nb, r_np = f_nb(), f_np()  # first call also compiles
        for a, b in zip(r_nb if isinstance(r_nb, tuple) else (r_nb,), r_np if isinstance(r_np, tuple) else (r_np,)):
            if not np.allclose(a, b):
                raise SystemExit(f"{name}: backends disagree")
        t_nb = best_of(f_nb, args.repeat) * 1e3
        t_np = best_of(f_np, args.repeat) * 1e3
        print(f"{name:30s} {t_nb:12.3f} {t_np:12.3f} {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
