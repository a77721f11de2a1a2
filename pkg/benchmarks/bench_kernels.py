"""Time the numba and numpy paths of each hot kernel on the same inputs.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5] [--grid 400000]

Numba compile time is paid once before timing. Each row reports the best of
``--repeat`` runs and checks that both paths return the same answer.
"""

import argparse
import timeit

import numpy as np

from mopp import _kernels
from mopp.problems import paper_example


def cases(rng, grid_points):
    G = rng.normal(size=(8, 6))
    values = paper_example().batch_evaluator(rng.uniform(-2, 3, size=(grid_points, 2)))
    # a reference nothing beats, so the scan runs to the end
    ref = values.min(axis=0) - 1.0
    breaks = rng.uniform(-2, 2, size=(200, 16))
    weights = rng.uniform(0, 1, size=(200, 16))
    center = rng.uniform(-3, 3, size=200)
    return {
        "minnorm_simplex (8x6)": ("minnorm_simplex", (G, 480, 1e-13)),
        f"first_strict_dominator ({grid_points}x2)": ("first_strict_dominator", (values, ref, 0.0)),
        f"first_pareto_dominator ({grid_points}x2)": ("first_pareto_dominator", (values, ref, 0.0)),
        "pwl_prox (200 coords x 16 kinks)": ("pwl_prox", (center, 0.8, breaks, weights)),
    }


def same(a, b):
    if isinstance(a, tuple):
        return np.allclose(a[0], b[0], atol=1e-10)
    return np.allclose(a, b, atol=1e-10)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--grid", type=int, default=400_000)
    args = parser.parse_args()
    if _kernels.numba_impl is None:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(0)
    print(f"{'kernel':44s} {'numpy [ms]':>11s} {'numba [ms]':>11s} {'speedup':>8s}  agree")
    for label, (name, inputs) in cases(rng, args.grid).items():
        fn_np = getattr(_kernels.numpy_impl, name)
        fn_nb = getattr(_kernels.numba_impl, name)
        agree = same(fn_np(*inputs), fn_nb(*inputs))  # also triggers compilation
        t_np = min(timeit.repeat(lambda: fn_np(*inputs), number=1, repeat=args.repeat)) * 1e3
        t_nb = min(timeit.repeat(lambda: fn_nb(*inputs), number=1, repeat=args.repeat)) * 1e3
        print(f"{label:44s} {t_np:11.3f} {t_nb:11.3f} {t_np / t_nb:7.1f}x  {agree}")


if __name__ == "__main__":
    main()
