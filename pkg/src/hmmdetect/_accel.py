"""Numba switch.

Set ``HMMDETECT_DISABLE_NUMBA=1`` to force the pure-numpy kernels, e.g. to
debug or to compare against the compiled path.
"""
import os
import warnings

_flag = os.environ.get("HMMDETECT_DISABLE_NUMBA", "").strip().lower()
DISABLED = _flag in ("1", "true", "yes", "on")

try:
    if DISABLED:
        raise ImportError
    import numba

    # an old system TBB only disables that threading layer; numba falls back quietly
    warnings.filterwarnings("ignore", message="The TBB threading layer", module="numba")
    HAS_NUMBA = True
except ImportError:
    numba = None
    HAS_NUMBA = False


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise a transparent decorator."""
    if HAS_NUMBA:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f


if HAS_NUMBA:
    prange = numba.prange
else:
    prange = range
