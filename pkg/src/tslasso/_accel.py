"""Backend switch for the compiled kernels.

Set ``TSLASSO_DISABLE_NUMBA=1`` before import to replace every compiled
kernel with its vectorised numpy twin. Results agree with the compiled path up
to floating-point summation order.
"""

import os

_FLAG = "TSLASSO_DISABLE_NUMBA"

numba_default = {
    "nogil": True,
    "cache": True,
    "fastmath": False,
    "boundscheck": False,
}


def _flag_set(value):
    return value.strip().lower() not in ("", "0", "false", "no")


USE_NUMBA = not _flag_set(os.environ.get(_FLAG, ""))

if USE_NUMBA:
    try:
        import numba
    except ImportError:  # pragma: no cover - numba is a declared dependency
        USE_NUMBA = False

BACKEND = "numba" if USE_NUMBA else "numpy"


def jit(func=None, *, fallback=None):
    """Compile ``func`` with numba when enabled.

    Without numba the decorator returns ``fallback`` (a numpy implementation
    with the same signature) or, if none is given, ``func`` unchanged.
    """
    def wrap(f):
        if USE_NUMBA:
            return numba.njit(**numba_default)(f)
        return f if fallback is None else fallback

    return wrap if func is None else wrap(func)
