"""Backend selection for the hot loops.

The compiled extension is used when it was built; otherwise the numpy
fallback is loaded. Set ``DRLMOA_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernels

if os.environ.get("DRLMOA_PURE_PYTHON") == "1":
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

two_opt_matrix = _impl.two_opt_matrix
nondominated_mask = _impl.nondominated_mask
nondominated_ranks = _impl.nondominated_ranks

__all__ = ["BACKEND", "two_opt_matrix", "nondominated_mask", "nondominated_ranks"]
