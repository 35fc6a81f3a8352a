"""Pick the compiled kernels when available.

Set FLUIDQ_PURE_PYTHON=1 to force the pure-Python implementations.
"""

import os

from . import _kernels_py

kernels = _kernels_py
BACKEND = "python"

if os.environ.get("FLUIDQ_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        kernels = _compiled
        BACKEND = "cython"
