"""Backend switch for the numeric kernels.

Every hot kernel in :mod:`otrlab.kernels` exists twice: a loop-style version
compiled with ``numba.njit`` and a vectorised pure-numpy version.  Which one
is used is decided once, at import time, from the ``OTRLAB_BACKEND``
environment variable:

``numba``   use the compiled kernels (default when numba is importable)
``numpy``   force the pure-numpy fallback

The numpy path is always importable, so the package works without numba.
"""
import os

_requested = os.environ.get("OTRLAB_BACKEND", "numba").strip().lower()

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    HAVE_NUMBA = False

if _requested not in ("numba", "numpy"):
    raise ValueError(f"OTRLAB_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

USE_NUMBA = HAVE_NUMBA and _requested == "numba"
BACKEND = "numba" if USE_NUMBA else "numpy"


def njit(*args, **kwargs):
    """``numba.njit(cache=True)`` when numba is installed, identity otherwise.

    Compilation is lazy, so decorating is harmless even when the numpy
    backend is selected.
    """
    if HAVE_NUMBA:
        import numba

        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f
