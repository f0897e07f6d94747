"""Numba switch.

Set ``THERMOLAB_DISABLE_NUMBA=1`` to run every kernel as plain Python/numpy.
The flag is read once, at import time.
"""
import os

DISABLE_ENV = "THERMOLAB_DISABLE_NUMBA"

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None


def _flag_set(name):
    return os.environ.get(name, "").strip().lower() in ("1", "true", "yes", "on")


USE_NUMBA = numba is not None and not _flag_set(DISABLE_ENV)


def njit(func=None, **kwargs):
    """``numba.njit(cache=True)`` when enabled, identity otherwise."""
    def wrap(f):
        if USE_NUMBA:
            return numba.njit(cache=True, **kwargs)(f)
        return f
    if func is not None:
        return wrap(func)
    return wrap


def backend_name():
    return "numba" if USE_NUMBA else "python"
