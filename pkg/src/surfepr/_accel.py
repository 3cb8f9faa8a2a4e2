"""Optional numba acceleration.

Set ``SURFEPR_DISABLE_NUMBA=1`` to force the pure numpy kernels. The
backend can also be switched at runtime with :func:`set_backend`, which is
what the tests and the benchmark use to compare both paths.
"""
import os
import warnings

try:
    import numba
    from numba import njit, prange
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(fn):
            return fn
        return wrap

    prange = range

if HAVE_NUMBA:
    # an old system TBB only disables that threading layer; numba falls back
    warnings.filterwarnings("ignore", message="The TBB threading layer")

_DISABLED = os.environ.get("SURFEPR_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")
_backend = "numba" if (HAVE_NUMBA and not _DISABLED) else "numpy"


def get_backend():
    """Return the active kernel backend, ``"numba"`` or ``"numpy"``."""
    return _backend


def set_backend(name):
    """Select the kernel backend.

    Parameters
    ----------
    name : {"numba", "numpy"}
        Requested backend. Asking for numba when it is unavailable raises.
    """
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    _backend = name


def set_threads(n):
    """Limit numba worker threads; a no-op without numba."""
    if HAVE_NUMBA and n:
        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
