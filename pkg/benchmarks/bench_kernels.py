"""Benchmark the subset-enumeration kernels: numba @njit vs pure numpy.

Usage:
    python benchmarks/bench_kernels.py [--worlds 16] [--actions 10] [--envs 8]

Builds a random frame of the requested size, then times the family sweeps
(all 2^worlds subsets) for the ensure/prevent/observe kernels on both
backends. Numba timings exclude the first, compile-bearing call. The same
inputs feed both backends and the outputs are checked for equality.
"""

from __future__ import annotations

import argparse
import random
import time

import numpy as np

from cartframes.frames import CartesianFrame, _observe_tables
from cartframes.kernels import numba_backend, numpy_backend


def random_frame(rng: random.Random, n_worlds: int, n_actions: int, n_envs: int):
    worlds = [f"w{i}" for i in range(n_worlds)]
    actions = [f"a{i}" for i in range(n_actions)]
    envs = [f"e{i}" for i in range(n_envs)]
    rows = [[rng.choice(worlds) for _ in envs] for _ in actions]
    return CartesianFrame.build(actions, envs, rows, worlds=worlds)


def time_call(fn, *args, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--worlds", type=int, default=16)
    parser.add_argument("--actions", type=int, default=10)
    parser.add_argument("--envs", type=int, default=8)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    frame = random_frame(rng, args.worlds, args.actions, args.envs)
    rows = np.array(frame.row_masks, dtype=np.uint64)
    feasible, need_in, need_out = _observe_tables(frame)

    size = 1 << args.worlds
    print(
        f"frame: {args.actions} actions x {args.envs} envs over {args.worlds} worlds; "
        f"sweeping {size} subsets, best of {args.repeats}"
    )
    cases = [
        ("ensure", (rows, args.worlds)),
        ("prevent", (rows, args.worlds)),
        ("observe", (feasible, need_in, need_out, args.worlds)),
    ]
    print(f"{'kernel':<10} {'numpy (s)':>12} {'numba (s)':>12} {'speedup':>9}")
    for name, call_args in cases:
        np_fn = getattr(numpy_backend, f"{name}_table")
        nb_fn = getattr(numba_backend, f"{name}_table")
        expect = np_fn(*call_args)
        got = nb_fn(*call_args)  # first call also triggers compilation
        assert np.array_equal(expect, got), f"{name}: backends disagree"
        t_np = time_call(np_fn, *call_args, repeats=args.repeats)
        t_nb = time_call(nb_fn, *call_args, repeats=args.repeats)
        print(f"{name:<10} {t_np:>12.4f} {t_nb:>12.4f} {t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
