"""Selects the compiled search kernels, falling back to pure Python.

Set ``TILEFIX_PURE_PYTHON=1`` to force the fallback.
"""
import os

from ._kernels_py import BUDGET, COUNT, ENUMERATE, FIRST, SAT, UNSAT

if os.environ.get("TILEFIX_PURE_PYTHON"):
    from . import _kernels_py as _impl
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        from . import _kernels_py as _impl
        BACKEND = "python"

search = _impl.search
profile_count = _impl.profile_count

__all__ = ["search", "profile_count", "BACKEND",
           "UNSAT", "SAT", "BUDGET", "FIRST", "COUNT", "ENUMERATE"]
