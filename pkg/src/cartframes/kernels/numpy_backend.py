"""Pure-numpy subset-family kernels.

Each function sweeps every subset of an n-world universe, encoded as the
bitmask 0..2^n-1 with bit i standing for world i. Vectorization is over the
subset axis; action structure stays as small python loops.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"


def _subsets(n_worlds: int) -> np.ndarray:
    return np.arange(1 << n_worlds, dtype=np.uint64)


def ensure_table(row_masks: np.ndarray, n_worlds: int) -> np.ndarray:
    """flags[s] = some action's full outcome row lies inside subset s."""
    subsets = _subsets(n_worlds)
    flags = np.zeros(subsets.size, dtype=np.bool_)
    for row in row_masks:
        flags |= (subsets & row) == row
    return flags


def prevent_table(row_masks: np.ndarray, n_worlds: int) -> np.ndarray:
    """flags[s] = some action's full outcome row avoids subset s entirely."""
    subsets = _subsets(n_worlds)
    flags = np.zeros(subsets.size, dtype=np.bool_)
    zero = np.uint64(0)
    for row in row_masks:
        flags |= (subsets & row) == zero
    return flags


def observe_table(
    feasible: np.ndarray,
    need_in: np.ndarray,
    need_out: np.ndarray,
    n_worlds: int,
) -> np.ndarray:
    """Conditional-policy observability over every subset.

    For each ordered action pair (a0, a1) and candidate policy action a, the
    caller precomputed whether the triple can work at all (`feasible`), which
    worlds must be inside the subset (`need_in`) and which must be outside
    (`need_out`). A subset is observable when every pair admits some policy.
    """
    n_actions = feasible.shape[0]
    subsets = _subsets(n_worlds)
    flags = np.ones(subsets.size, dtype=np.bool_)
    zero = np.uint64(0)
    for i0 in range(n_actions):
        for i1 in range(n_actions):
            pair_ok = np.zeros(subsets.size, dtype=np.bool_)
            for a in range(n_actions):
                if not feasible[i0, i1, a]:
                    continue
                inside = need_in[i0, i1, a]
                outside = need_out[i0, i1, a]
                pair_ok |= ((subsets & inside) == inside) & ((subsets & outside) == zero)
            flags &= pair_ok
            if not flags.any():
                return flags
    return flags
