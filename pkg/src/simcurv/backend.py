"""Kernel backend selection: numba-compiled or pure-numpy hot loops.

The integrator and model right-hand sides in ``_kernels`` are written in
plain numpy style and compiled with ``numba.njit`` when available.  Setting
the environment variable ``SIMCURV_NUMBA=0`` (before import) selects the
uncompiled fallback path; the two paths run the same source.
"""

import os

_flag = os.environ.get("SIMCURV_NUMBA", "1").strip().lower()
_want_numba = _flag not in ("0", "false", "off", "no")

if _want_numba:
    try:
        from numba import njit as _njit

        USE_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        USE_NUMBA = False
else:
    USE_NUMBA = False


def jit(fn):
    """Compile ``fn`` with numba when the backend is enabled, else return it."""
    if USE_NUMBA:
        return _njit(cache=True, nogil=True)(fn)
    return fn


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
