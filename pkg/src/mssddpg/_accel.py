"""Numba dispatch for the hot loops.

Set ``MSSDDPG_DISABLE_NUMBA=1`` before import to route every kernel to its
pure-numpy implementation (useful for debugging and for platforms without
numba wheels).
"""

from __future__ import annotations

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    numba = None

DISABLED_BY_ENV = os.environ.get("MSSDDPG_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}
HAVE_NUMBA = numba is not None
NUMBA_ENABLED = HAVE_NUMBA and not DISABLED_BY_ENV


def njit(fn):
    """Compile ``fn`` in nopython mode, or return it unchanged without numba."""
    if numba is None:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


def select(numba_impl, numpy_impl):
    return numba_impl if NUMBA_ENABLED else numpy_impl
