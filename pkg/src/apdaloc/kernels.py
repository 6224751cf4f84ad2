"""Hot-loop kernels with a compiled backend and a numpy fallback.

The compiled extension is used when it imports; set ``APDALOC_PURE_PYTHON=1``
to force the numpy versions. Elementwise kernels dominated by exp/log stay on
numpy even then, because its SIMD transcendental functions outrun scalar libm
calls (see ``benchmarks/bench_kernels.py``); the compiled versions of those
remain available as ``_kernels_c`` for comparison.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("APDALOC_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels_c as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        pass

# numpy wins on these (vectorized exp/log/i0e)
distance_terms = _kernels_py.distance_terms
rice_rayleigh_log_ratio = _kernels_py.rice_rayleigh_log_ratio
# compiled loops win on these (early exit on underflow, sequential scan)
row_log_mix = _impl.row_log_mix
column_log_mix = _impl.column_log_mix
systematic_resample = _impl.systematic_resample

__all__ = [
    "BACKEND",
    "distance_terms",
    "row_log_mix",
    "column_log_mix",
    "systematic_resample",
    "rice_rayleigh_log_ratio",
]
