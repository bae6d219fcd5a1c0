"""Compare the numba kernels against the pure-numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from mdselect._kernels import (_assign_np, _build_numba, _el2n_dense_np,
                               _entropy_dense_np)


def bench(fn, args, repeat):
    fn(*args)  # warm-up (JIT compile / cache touch)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--rows", type=int, default=20_000)
    parser.add_argument("--vocab", type=int, default=512)
    args = parser.parse_args()

    nb_entropy, _, nb_el2n, _, nb_assign = _build_numba()

    rng = np.random.default_rng(0)
    rows = rng.random((args.rows, args.vocab))
    rows /= rows.sum(axis=1, keepdims=True)
    refs = rng.integers(0, args.vocab, size=args.rows)
    points = rng.normal(size=(args.rows, 32))
    centroids = rng.normal(size=(64, 32))

    cases = [
        ("entropy_dense", (_entropy_dense_np, nb_entropy), (rows, args.vocab)),
        ("el2n_dense", (_el2n_dense_np, nb_el2n), (rows, refs)),
        ("assign_nearest", (_assign_np, nb_assign), (points, centroids)),
    ]

    print(f"{'kernel':<16} {'numpy (s)':>12} {'numba (s)':>12} {'speedup':>9}")
    for name, (np_fn, nb_fn), fn_args in cases:
        t_np = bench(np_fn, fn_args, args.repeat)
        t_nb = bench(nb_fn, fn_args, args.repeat)
        print(f"{name:<16} {t_np:>12.4f} {t_nb:>12.4f} {t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
