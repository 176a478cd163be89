"""Kernel backend selection.

The compiled Cython core is used when it was built; otherwise the numpy
fallback.  Setting ``BANACHMC_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _kernels_py

if os.environ.get("BANACHMC_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

sign_norms = _impl.sign_norms
local_basis = _impl.local_basis

__all__ = ["BACKEND", "sign_norms", "local_basis"]
