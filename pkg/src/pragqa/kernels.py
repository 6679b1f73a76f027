"""Kernel selection: compiled extension when importable, NumPy otherwise.

Set ``PRAGQA_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("PRAGQA_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

BACKEND: str = _impl.BACKEND
dp_value = _impl.dp_value
conditioned_values = _impl.conditioned_values

__all__ = ["BACKEND", "dp_value", "conditioned_values"]
