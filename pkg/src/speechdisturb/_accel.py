"""Backend selection for the numeric kernels.

Set ``SPEECHDISTURB_NO_NUMBA=1`` to force the pure-numpy code paths. When
numba is missing the numpy paths are used automatically.
"""
import os

_disabled = os.environ.get("SPEECHDISTURB_NO_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _disabled:
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda fn: fn


BACKEND = "numba" if HAVE_NUMBA else "numpy"
