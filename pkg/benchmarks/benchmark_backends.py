"""Per-step timing of the compiled kernels against the NumPy reference.

Both backends are imported directly, so one process measures both
regardless of which one the package selected at import. Run as:

    python3 benchmarks/benchmark_backends.py [--steps N]
"""

import argparse
import time

import numpy as np

from rankreduce import _kernels_py
from rankreduce.rls import full_rank_init, jio_init

try:
    from rankreduce import _kernels
except ImportError:
    _kernels = None

JOINT_SHAPES = [(16, 2), (48, 4), (96, 4)]
FULL_SHAPES = [16, 48, 96]


def time_joint(kernel_module, dim, rank, steps, seed=7):
    rng = np.random.default_rng(seed)
    state = jio_init(dim, rank)
    obs = rng.standard_normal((steps, dim)) + 1j * rng.standard_normal((steps, dim))
    obs = np.ascontiguousarray(obs)
    des = rng.standard_normal(steps) + 1j * rng.standard_normal(steps)
    start = time.perf_counter()
    for i in range(steps):
        kernel_module.jio_step_kernel(
            obs[i],
            complex(des[i]),
            state.lam,
            state.weights,
            state.projection,
            state.P_full,
            state.P_reduced,
            state.P_weights,
        )
    return (time.perf_counter() - start) / steps


def time_full(kernel_module, dim, steps, seed=11):
    rng = np.random.default_rng(seed)
    state = full_rank_init(dim)
    obs = rng.standard_normal((steps, dim)) + 1j * rng.standard_normal((steps, dim))
    obs = np.ascontiguousarray(obs)
    des = rng.standard_normal(steps) + 1j * rng.standard_normal(steps)
    start = time.perf_counter()
    for i in range(steps):
        kernel_module.full_rank_step_kernel(
            obs[i], complex(des[i]), state.lam, state.weights, state.P
        )
    return (time.perf_counter() - start) / steps


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=2000, help="steps per measurement")
    args = parser.parse_args()

    if _kernels is None:
        print("compiled extension unavailable; timing the NumPy reference only")

    header = f"{'kernel':>22} {'python us/step':>15} {'cython us/step':>15} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for dim, rank in JOINT_SHAPES:
        py = time_joint(_kernels_py, dim, rank, args.steps)
        label = f"joint M={dim} D={rank}"
        if _kernels is None:
            print(f"{label:>22} {py * 1e6:>15.2f} {'-':>15} {'-':>8}")
        else:
            cy = time_joint(_kernels, dim, rank, args.steps)
            print(f"{label:>22} {py * 1e6:>15.2f} {cy * 1e6:>15.2f} {py / cy:>7.1f}x")
    for dim in FULL_SHAPES:
        py = time_full(_kernels_py, dim, args.steps)
        label = f"full-rank M={dim}"
        if _kernels is None:
            print(f"{label:>22} {py * 1e6:>15.2f} {'-':>15} {'-':>8}")
        else:
            cy = time_full(_kernels, dim, args.steps)
            print(f"{label:>22} {py * 1e6:>15.2f} {cy * 1e6:>15.2f} {py / cy:>7.1f}x")


if __name__ == "__main__":
    main()
