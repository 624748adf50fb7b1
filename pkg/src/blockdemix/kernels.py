"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise, or when
``BLOCKDEMIX_PURE_PYTHON`` is set to a non-empty value, the numpy fallback.
"""

import os

from . import _kernels_py

if os.environ.get("BLOCKDEMIX_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = "python" if _impl is _kernels_py else "cython"

block_project = _impl.block_project
tone_argmax = _impl.tone_argmax
tone_scores = _impl.tone_scores

__all__ = ["BACKEND", "block_project", "tone_argmax", "tone_scores"]
