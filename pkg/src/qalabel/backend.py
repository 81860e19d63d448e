"""Kernel backend selection.

The env flag QALABEL_BACKEND picks the implementation of the hot kernels:

  auto   use numba if it imports, else pure numpy (default)
  numba  require the numba kernels
  numpy  force the pure-numpy fallbacks

Functions also accept an explicit ``backend=`` argument, which overrides
the flag (used by the cross-backend tests and the benchmark).
"""

from __future__ import annotations

import os
from types import ModuleType

from . import kernels_numpy

_numba_module: ModuleType | None = None
_numba_error: Exception | None = None


def _load_numba_kernels() -> ModuleType:
    global _numba_module, _numba_error
    if _numba_module is None and _numba_error is None:
        try:
            from . import kernels_numba

            _numba_module = kernels_numba
        except Exception as exc:  # pragma: no cover - depends on environment
            _numba_error = exc
    if _numba_module is None:
        raise RuntimeError(f"numba backend requested but unavailable: {_numba_error}")
    return _numba_module


def numba_available() -> bool:
    try:
        _load_numba_kernels()
        return True
    except RuntimeError:
        return False


def active_backend() -> str:
    """Resolve the QALABEL_BACKEND flag to 'numba' or 'numpy'."""
    flag = os.environ.get("QALABEL_BACKEND", "auto").lower()
    if flag not in ("auto", "numba", "numpy"):
        raise ValueError(f"QALABEL_BACKEND must be auto|numba|numpy, got {flag!r}")
    if flag == "numpy":
        return "numpy"
    if flag == "numba":
        _load_numba_kernels()
        return "numba"
    return "numba" if numba_available() else "numpy"


def get_kernels(backend: str | None = None) -> ModuleType:
    name = backend if backend is not None else active_backend()
    if name == "numpy":
        return kernels_numpy
    if name == "numba":
        return _load_numba_kernels()
    raise ValueError(f"unknown backend {name!r}")
