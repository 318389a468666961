"""Pick the compiled kernels when available, else the pure-Python twin.

Set ``DIMWIT_PURE_PYTHON=1`` to force the fallback.
"""
import os

BACKEND = "python"
if os.environ.get("DIMWIT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as kernels
        BACKEND = "compiled"
    except ImportError:
        kernels = None
else:
    kernels = None

if kernels is None:
    from . import _pykernels as kernels

__all__ = ["BACKEND", "kernels"]
