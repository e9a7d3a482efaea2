"""JIT selection.

Set ``QTRAJ_NUMBA=0`` to run every kernel as plain numpy/Python code.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

USE_NUMBA = numba is not None and os.environ.get("QTRAJ_NUMBA", "1").lower() not in ("0", "false", "no")


def jit(func):
    if USE_NUMBA:
        return numba.njit(cache=True, nogil=True)(func)
    return func
