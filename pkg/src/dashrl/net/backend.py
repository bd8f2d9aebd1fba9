"""Kernel backend selection: compiled extension when available, numpy otherwise.

Override with DASHRL_BACKEND=python|compiled ("compiled" raises when the
extension was not built).
"""

from __future__ import annotations

import os

from . import _kernels_py

try:
    from . import _ckernels  # type: ignore

    HAVE_COMPILED = True
except ImportError:
    _ckernels = None
    HAVE_COMPILED = False


def backend_name() -> str:
    forced = os.environ.get("DASHRL_BACKEND", "auto").lower()
    if forced == "python":
        return "python"
    if forced == "compiled":
        if not HAVE_COMPILED:
            raise RuntimeError("compiled kernels requested but not built")
        return "compiled"
    return "compiled" if HAVE_COMPILED else "python"


def get_kernels(name: str | None = None):
    """Return the kernel module for ``name`` (or the selected default)."""
    resolved = name or backend_name()
    if resolved == "compiled":
        if not HAVE_COMPILED:
            raise RuntimeError("compiled kernels are not available")
        return _ckernels
    return _kernels_py
