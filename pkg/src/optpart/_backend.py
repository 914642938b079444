"""Kernel backend selection.

Hot loops are written twice: a numba ``@njit`` version and a vectorised
numpy version. ``OPTPART_DISABLE_NUMBA=1`` forces the numpy path. The two
paths are required to agree bit for bit; only speed differs.
"""
import os

_DISABLED = os.environ.get("OPTPART_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False
    _njit = None

BACKEND = "numba" if HAVE_NUMBA else "numpy"


def njit(func):
    """``numba.njit(cache=True)`` when numba is active, else ``None``."""
    if not HAVE_NUMBA:
        return None
    return _njit(cache=True)(func)


def select(fast, fallback):
    """Pick the jitted kernel if it exists."""
    return fast if fast is not None else fallback
