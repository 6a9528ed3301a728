"""Kernel backend selection: numba-compiled or pure numpy.

The hot per-step kernels in :mod:`flapsim._kernels` are written once in a
numba-compatible subset of numpy and decorated through :func:`jit_kernel`.
Selection happens at import time from the ``FLAPSIM_BACKEND`` environment
variable:

* ``auto`` (default) - use numba when importable, else fall back to numpy
* ``numba``          - require numba, fail loudly if missing
* ``numpy``          - force the pure-numpy path (reference/debug)

``benchmarks/bench_backends.py`` times the two paths against each other.
"""

import os

_CHOICES = ("auto", "numba", "numpy")


def _select():
    choice = os.environ.get("FLAPSIM_BACKEND", "auto").strip().lower() or "auto"
    if choice not in _CHOICES:
        raise ValueError(
            f"FLAPSIM_BACKEND must be one of {_CHOICES}, got {choice!r}"
        )
    if choice == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
    except ImportError:
        if choice == "numba":
            raise
        return "numpy"
    return "numba"


BACKEND = _select()
USING_NUMBA = BACKEND == "numba"

if USING_NUMBA:
    from numba import njit as _njit

    def jit_kernel(fn):
        return _njit(cache=True, fastmath=False)(fn)

else:

    def jit_kernel(fn):
        return fn
