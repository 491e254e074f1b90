"""Select the kernel backend at import time.

The compiled ``_ckernels`` extension is preferred. Setting the environment
variable ``WOTKIT_PURE_PYTHON=1`` forces the numpy fallback, which is also
used whenever the extension has not been built.
"""
import os

if os.environ.get("WOTKIT_PURE_PYTHON", "") not in ("", "0"):
    from . import _pykernels as kernels

    BACKEND = "python"
else:
    try:
        from . import _ckernels as kernels
    except ImportError:
        from . import _pykernels as kernels

        BACKEND = "python"
    else:
        BACKEND = "cython"

__all__ = ["kernels", "BACKEND"]
