"""JIT infrastructure for the hot lattice-sum and counting kernels.

Numba is used when available; setting the environment variable
``WAVEKIN_DISABLE_NUMBA=1`` (before import) selects the pure-NumPy/Python
fallback path instead.  Both paths run the same algorithm and produce
identical results; ``benchmarks/bench_kernels.py`` compares their speed.
"""

import os

NUMBA_DISABLED = os.environ.get("WAVEKIN_DISABLE_NUMBA", "").strip() not in ("", "0")

if not NUMBA_DISABLED:
    try:
        from numba import njit, prange

        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        HAVE_NUMBA = False
else:
    HAVE_NUMBA = False

if not HAVE_NUMBA:
    def njit(*args, **kwargs):
        """Identity decorator standing in for numba.njit."""
        if args and callable(args[0]) and len(args) == 1 and not kwargs:
            return args[0]

        def wrap(fn):
            return fn

        return wrap

    prange = range

JIT_OPTIONS = {"cache": True, "fastmath": False}


def backend_name() -> str:
    return "numba" if HAVE_NUMBA else "numpy"
