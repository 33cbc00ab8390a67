"""Hot loops with two interchangeable implementations.

The compiled (numba) backend is used when available. Setting the environment
variable ``SPECVAR_DISABLE_NUMBA=1`` before import forces the numpy backend.
Both backends consume identical splitmix64 streams, so a given seed yields the
same draws either way.
"""

import os

from . import _numpy as numpy_backend

_FLAG = "SPECVAR_DISABLE_NUMBA"


def numba_disabled() -> bool:
    return os.environ.get(_FLAG, "").strip().lower() in {"1", "true", "yes", "on"}


numba_backend = None
if not numba_disabled():
    try:
        from . import _numba as numba_backend
    except ImportError:  # numba missing or broken: stay on numpy
        numba_backend = None

backend = numba_backend if numba_backend is not None else numpy_backend


def get_backend(name: str | None = None):
    """Return a backend module by name, or the active one when ``name`` is None."""
    if name is None:
        return backend
    if name == "numpy":
        return numpy_backend
    if name == "numba":
        if numba_backend is None:
            from . import _numba
            return _numba
        return numba_backend
    raise ValueError(f"unknown backend {name!r}")


__all__ = ["backend", "get_backend", "numba_backend", "numpy_backend", "numba_disabled"]
