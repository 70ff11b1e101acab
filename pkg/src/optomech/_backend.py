"""Select the polynomial kernel implementation at import time.

The compiled extension is preferred.  Setting ``OPTOMECH_PURE_PYTHON=1`` forces
the pure-Python fallback, which is also used automatically when the extension
has not been built.
"""
import os

from . import _kernels_py

BACKEND = "python"
kernels = _kernels_py

if os.environ.get("OPTOMECH_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        kernels = _compiled
        BACKEND = "cython"

__all__ = ["BACKEND", "kernels"]
