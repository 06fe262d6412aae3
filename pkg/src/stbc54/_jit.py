"""Numba switch.

Set ``STBC54_DISABLE_NUMBA=1`` to run every kernel through its pure-numpy
fallback. Numba not being importable has the same effect.
"""
import os

_FLAG = "STBC54_DISABLE_NUMBA"


def _numba_disabled():
    return os.environ.get(_FLAG, "").strip().lower() in ("1", "true", "yes", "on")


USE_NUMBA = not _numba_disabled()

if USE_NUMBA:
    try:
        import numba
    except ImportError:  # pragma: no cover
        USE_NUMBA = False


def njit(func):
    """Compile ``func`` with numba (nopython, nogil, cached) when enabled.

    The undecorated Python function stays reachable as ``.py_func`` in both
    modes, so tests can run the two paths side by side.
    """
    if not USE_NUMBA:
        func.py_func = func
        return func
    return numba.njit(cache=True, nogil=True)(func)
