"""Numba-jitted subset-family kernels.

Same contracts as numpy_backend, compiled to tight loops. Subset masks fit in
uint64 (the enumeration cap keeps n_worlds small), so all bit tests are plain
integer ops with early exits per subset.
"""

from __future__ import annotations

import numpy as np
from numba import njit

NAME = "numba"


@njit(cache=True)
def ensure_table(row_masks, n_worlds):
    size = 1 << n_worlds
    flags = np.zeros(size, dtype=np.bool_)
    for s in range(size):
        su = np.uint64(s)
        for r in range(row_masks.shape[0]):
            if row_masks[r] & su == row_masks[r]:
                flags[s] = True
                break
    return flags


@njit(cache=True)
def prevent_table(row_masks, n_worlds):
    size = 1 << n_worlds
    flags = np.zeros(size, dtype=np.bool_)
    zero = np.uint64(0)
    for s in range(size):
        su = np.uint64(s)
        for r in range(row_masks.shape[0]):
            if row_masks[r] & su == zero:
                flags[s] = True
                break
    return flags


@njit(cache=True)
def observe_table(feasible, need_in, need_out, n_worlds):
    size = 1 << n_worlds
    n_actions = feasible.shape[0]
    flags = np.ones(size, dtype=np.bool_)
    zero = np.uint64(0)
    for s in range(size):
        su = np.uint64(s)
        ok = True
        for i0 in range(n_actions):
            if not ok:
                break
            for i1 in range(n_actions):
                pair_ok = False
                for a in range(n_actions):
                    if not feasible[i0, i1, a]:
                        continue
                    inside = need_in[i0, i1, a]
                    outside = need_out[i0, i1, a]
                    if (su & inside) == inside and (su & outside) == zero:
                        pair_ok = True
                        break
                if not pair_ok:
                    ok = False
                    break
        flags[s] = ok
    return flags
