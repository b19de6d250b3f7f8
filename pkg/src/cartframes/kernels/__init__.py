"""Backend dispatch for the subset-enumeration kernels.

The hot loops (sweeping all 2^n subsets of a world set) exist twice: a
numba-jitted version and a pure-numpy fallback. Selection order:

* ``CARTFRAMES_BACKEND=numba``  force numba (ImportError if unavailable)
* ``CARTFRAMES_BACKEND=numpy``  force the numpy fallback
* unset / ``auto``              numba when importable, else numpy

Both backends return identical arrays for identical inputs; the test suite
and ``benchmarks/bench_kernels.py`` compare them directly.
"""

from __future__ import annotations

import os
from types import ModuleType

import numpy as np

from ..errors import ValidationError

ENV_VAR = "CARTFRAMES_BACKEND"

_numba_backend: ModuleType | None = None
_numba_import_error: Exception | None = None


def _load_numba() -> ModuleType | None:
    global _numba_backend, _numba_import_error
    if _numba_backend is None and _numba_import_error is None:
        try:
            from . import numba_backend

            _numba_backend = numba_backend
        except ImportError as exc:  # pragma: no cover - depends on env
            _numba_import_error = exc
    return _numba_backend


def backend() -> ModuleType:
    """Resolve the active kernel backend from the environment."""
    from . import numpy_backend

    choice = os.environ.get(ENV_VAR, "auto").strip().lower()
    if choice in ("", "auto"):
        return _load_numba() or numpy_backend
    if choice == "numpy":
        return numpy_backend
    if choice == "numba":
        mod = _load_numba()
        if mod is None:  # pragma: no cover - depends on env
            raise ValidationError(
                f"{ENV_VAR}=numba but numba is not importable: {_numba_import_error}"
            )
        return mod
    raise ValidationError(f"{ENV_VAR} must be 'auto', 'numba' or 'numpy', got {choice!r}")


def backend_name() -> str:
    return backend().NAME


def ensure_table(row_masks: np.ndarray, n_worlds: int) -> np.ndarray:
    return backend().ensure_table(row_masks, n_worlds)


def prevent_table(row_masks: np.ndarray, n_worlds: int) -> np.ndarray:
    return backend().prevent_table(row_masks, n_worlds)


def observe_table(
    feasible: np.ndarray, need_in: np.ndarray, need_out: np.ndarray, n_worlds: int
) -> np.ndarray:
    return backend().observe_table(feasible, need_in, need_out, n_worlds)
