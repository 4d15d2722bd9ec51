"""Backend selection for the hot loops.

The compiled extension is used when it imports; setting ``QBP_PURE_PYTHON=1``
forces the NumPy fallback.
"""
from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("QBP_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
    except ImportError:  # extension not built
        pass
    else:
        _impl = _compiled
        BACKEND = "compiled"

anneal_reads = _impl.anneal_reads
gray_ground = _impl.gray_ground

__all__ = ["BACKEND", "anneal_reads", "gray_ground"]
