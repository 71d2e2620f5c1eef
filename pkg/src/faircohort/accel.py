"""Numba acceleration with an env-selected interpreted fallback.

The hot kernels in this package (the pairwise rounding pass, the water-fill
solvers, and the two streaming state machines) are written as plain Python
functions over NumPy arrays and compiled with numba's ``@njit`` by default.
Setting ``FAIRCOHORT_DISABLE_NUMBA=1`` skips compilation and runs the same
functions interpreted. Both backends consume identical random streams, so
any seeded run produces bit-identical results either way; only speed
differs (see ``benchmarks/bench_kernels.py``).
"""

from __future__ import annotations

import os

ENV_FLAG = "FAIRCOHORT_DISABLE_NUMBA"


def _detect() -> bool:
    if os.environ.get(ENV_FLAG, "0").strip() not in ("", "0"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


NUMBA_ENABLED = _detect()

if NUMBA_ENABLED:
    from numba import njit

    def jit_kernel(fn):
        """Compile a hot kernel (identity decorator in fallback mode)."""
        return njit(cache=True)(fn)

else:

    def jit_kernel(fn):
        return fn


def python_impl(fn):
    """Return the uncompiled version of a kernel, for backend cross-checks."""
    return getattr(fn, "py_func", fn)
