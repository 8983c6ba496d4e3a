"""Kernel dispatch: compiled extension if importable, numpy fallback otherwise.

Set ``BMK_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("BMK_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        _impl = _compiled

legendre_table = _impl.legendre_table
jet_algebra = _impl.jet_algebra
# a BLAS matrix product beats the compiled loop here (see benchmarks/)
support_max = _kernels_py.support_max

__all__ = ["BACKEND", "legendre_table", "jet_algebra", "support_max"]
