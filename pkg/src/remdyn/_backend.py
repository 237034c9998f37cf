"""Kernel backend selection.

The compiled extension is used when importable; ``REMDYN_BACKEND=python``
forces the numpy fallback. Both expose the same functions.
"""
import os

from . import _pykernels

_forced = os.environ.get("REMDYN_BACKEND", "").lower()

kernels = _pykernels
if _forced != "python":
    try:
        from . import _ext as kernels  # type: ignore[no-redef]
    except ImportError:
        if _forced == "cython":
            raise
        kernels = _pykernels

BACKEND = kernels.BACKEND
