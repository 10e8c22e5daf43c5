"""Kernel backend selection.

The compiled extension is used when importable; ``SABRLMM_BACKEND=python``
forces the numpy fallback and ``SABRLMM_BACKEND=cython`` makes a missing
extension an import error.
"""

from __future__ import annotations

import os

from . import _kernels_py

_choice = os.environ.get("SABRLMM_BACKEND", "auto").lower()
if _choice not in ("auto", "python", "cython"):
    raise ImportError(f"SABRLMM_BACKEND must be auto, python or cython, got {_choice!r}")

_compiled = None
if _choice != "python":
    try:
        from . import _kernels as _compiled
    except ImportError:
        if _choice == "cython":
            raise

kernels = _compiled if _compiled is not None else _kernels_py
NAME = "cython" if _compiled is not None else "python"


def get(name: str):
    """Kernel module by backend name, for tests and benchmarks."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not available")
        return _compiled
    raise ValueError(name)


def available() -> list[str]:
    return ["python"] + (["cython"] if _compiled is not None else [])
