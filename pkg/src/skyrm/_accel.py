"""Backend selection for the hot kernels.

Every performance-critical loop in this package exists twice: a numba
``@njit`` version and a vectorized pure-numpy version.  Which one runs is
decided by :func:`use_numba`, which reads the ``SKYR_NO_NUMBA`` environment
variable once at import and can be flipped at runtime (tests and the kernel
benchmark exercise both paths in one process).
"""

from __future__ import annotations

import os

_FORCED: bool | None = None

try:
    if os.environ.get("SKYR_NO_NUMBA", "0") == "1":
        raise ImportError
    from numba import njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

    def njit(*args, **kwargs):  # noqa: ANN002, ANN003 - mirrors numba's signature
        """No-op stand-in so ``@njit(...)`` decorated code still imports."""
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


def use_numba() -> bool:
    """True when the jitted kernels should be dispatched to."""
    if _FORCED is not None:
        return _FORCED and HAS_NUMBA
    return HAS_NUMBA


def force_backend(name: str | None) -> None:
    """Override backend choice: "numba", "numpy", or None to restore default."""
    global _FORCED
    if name is None:
        _FORCED = None
    elif name == "numba":
        _FORCED = True
    elif name == "numpy":
        _FORCED = False
    else:
        raise ValueError(f"unknown backend {name!r}")


def set_threads(n: int) -> None:
    """Cap numba's thread pool; silently a no-op on the numpy path."""
    if HAS_NUMBA and n > 0:
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
