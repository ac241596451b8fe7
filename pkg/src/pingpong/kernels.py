"""Backend selection for the state-engine kernels.

The compiled Cython module is used when it imports cleanly; otherwise the
numpy implementation is used. Set ``PINGPONG_PURE_PYTHON=1`` to force the
fallback (useful for the benchmark and for cross-checking the two).
"""

import os

from . import _kernels_py

if os.environ.get("PINGPONG_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

apply_coo = _impl.apply_coo
norm2 = _impl.norm2
class_weights = _impl.class_weights
project = _impl.project

__all__ = ["BACKEND", "apply_coo", "norm2", "class_weights", "project"]
