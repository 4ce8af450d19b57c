"""Optional numba acceleration.

Set ``JSCC_LAB_NO_JIT=1`` to force the pure-numpy kernels. If numba cannot be
imported the numpy kernels are used as well, with a warning.
"""

import os
import warnings

__all__ = ["HAVE_NUMBA", "USE_NUMBA", "njit"]


class PerformanceWarning(UserWarning):
    pass


def _env_disabled():
    return os.environ.get("JSCC_LAB_NO_JIT", "").strip().lower() in ("1", "true", "yes", "on")


try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _env_disabled()

if not HAVE_NUMBA and not _env_disabled():  # pragma: no cover
    warnings.warn("numba is not available; falling back to numpy kernels", PerformanceWarning)


def njit(func):
    """Compile ``func`` in nopython mode when numba is installed.

    Compilation is lazy, so merely importing the kernels module never pays
    the JIT cost when the numpy path is selected.
    """
    if not HAVE_NUMBA:
        return func
    return numba.njit(cache=True, nogil=True)(func)
