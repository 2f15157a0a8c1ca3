"""Kernel backend selection: numba @njit or pure-Python fallback.

The backend is chosen once, at import time:

* ``GSTWDP_BACKEND=numpy`` (or ``GSTWDP_DISABLE_NUMBA=1``) forces the
  pure-Python/NumPy fallback path.
* ``GSTWDP_BACKEND=numba`` insists on numba and raises if it is missing.
* unset: numba when importable, fallback otherwise.

Kernels are written as scalar/loop code that is valid under both backends,
so the two paths share one source of truth.  ``USING_NUMBA`` reports which
path is active; ``benchmarks/bench_backends.py`` times one against the
other.
"""

from __future__ import annotations

import os

_env_backend = os.environ.get("GSTWDP_BACKEND", "").strip().lower()
_env_disable = os.environ.get("GSTWDP_DISABLE_NUMBA", "").strip().lower()

if _env_backend not in ("", "numba", "numpy"):
    raise RuntimeError(
        "GSTWDP_BACKEND must be 'numba' or 'numpy', got %r" % _env_backend
    )

_want_numba = _env_backend != "numpy" and _env_disable not in ("1", "true", "yes")

USING_NUMBA = False
if _want_numba:
    try:
        from numba import njit as _numba_njit  # noqa: F401

        USING_NUMBA = True
    except ImportError:
        if _env_backend == "numba":
            raise
        USING_NUMBA = False


def maybe_njit(*args, **kwargs):
    """``numba.njit`` under the numba backend, identity otherwise.

    Usable both bare (``@maybe_njit``) and with options
    (``@maybe_njit(cache=True)``).
    """
    if USING_NUMBA:
        from numba import njit

        return njit(*args, **kwargs)
    # fallback: strip decorator arguments and return the function unchanged
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrap(func):
        return func

    return wrap


def backend_name() -> str:
    return "numba" if USING_NUMBA else "numpy"
