"""Kernel backend selection.

Imports the compiled extension when it was built, otherwise falls back to
the pure-Python implementations. Set GENUQ_PURE_PYTHON=1 to force the
fallback (used by the backend-comparison benchmark and tests).
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("GENUQ_PURE_PYTHON") == "1":
    _impl = _kernels_py
else:
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

BACKEND: str = _impl.BACKEND
lcs_length = _impl.lcs_length
clipped_ngram_matches = _impl.clipped_ngram_matches

__all__ = ["BACKEND", "lcs_length", "clipped_ngram_matches"]
