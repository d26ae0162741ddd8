"""Backend switch for the compiled kernels.

Kernels are written once as plain numpy code.  When numba is importable and
``ASYMHERD_DISABLE_NUMBA`` is unset (or falsy) they are compiled with
``numba.njit``; otherwise the same functions run under CPython.
"""
import os

_FALSY = {"", "0", "false", "no", "off"}

NUMBA_DISABLED = os.environ.get("ASYMHERD_DISABLE_NUMBA", "").strip().lower() not in _FALSY

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None

HAS_NUMBA = numba is not None
USE_NUMBA = HAS_NUMBA and not NUMBA_DISABLED
BACKEND = "numba" if USE_NUMBA else "numpy"


def kernel(fn):
    """Compile ``fn`` with numba when the numba backend is active.

    The uncompiled function stays reachable as ``fn.py_func`` in both modes so
    benchmarks and tests can call either path explicitly.
    """
    if USE_NUMBA:
        return numba.njit(cache=True)(fn)
    fn.py_func = fn
    return fn

