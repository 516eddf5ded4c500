"""Hot loops: compiled extension when available, numpy otherwise.

Set ``PERIDYN_PURE=1`` to force the numpy implementation.
"""

import os

from . import _fallback

BACKEND = "numpy"
if os.environ.get("PERIDYN_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _fallback
else:
    _impl = _fallback

LINEAR = _fallback.LINEAR
EXPONENTIAL = _fallback.EXPONENTIAL
stencil_force = _impl.stencil_force
banded_matvec = _impl.banded_matvec

__all__ = ["BACKEND", "LINEAR", "EXPONENTIAL", "stencil_force", "banded_matvec", "_fallback"]
