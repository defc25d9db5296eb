"""Backend selection for the hot grid kernels.

The compiled Cython module is preferred when present; the pure-numpy
fallback is used otherwise.  ``SHORELAKE_BACKEND`` forces the choice:
``cython`` (error if missing), ``numpy``, or ``auto`` (default).
Both backends implement identical contracts and are cross-checked in the
test suite; ``benchmarks/bench_backends.py`` compares their speed.
"""

import os

_requested = os.environ.get("SHORELAKE_BACKEND", "auto").lower()

if _requested not in ("auto", "cython", "numpy"):
    raise RuntimeError(f"SHORELAKE_BACKEND={_requested!r} not in auto/cython/numpy")

if _requested == "numpy":
    from . import numpy_backend as _impl
    BACKEND = "numpy"
else:
    try:
        from . import _speedups as _impl
        BACKEND = "cython"
    except ImportError:
        if _requested == "cython":
            raise
        from . import numpy_backend as _impl
        BACKEND = "numpy"

apply_weighted_laplacian = _impl.apply_weighted_laplacian
upwind_flux_divergence = _impl.upwind_flux_divergence
outflow_sums = _impl.outflow_sums


def backend_name():
    return BACKEND
