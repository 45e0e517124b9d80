"""Backend selection: compiled extension vs pure-Python kernels.

The Cython extension ``cfmm._core`` mirrors ``cfmm._kernels_py`` function for
function.  Selection happens per call through :func:`get`:

  * a flop tally always routes to the pure-Python kernels (they do the
    bookkeeping),
  * otherwise the compiled core is used when importable,
  * ``CFMM_BACKEND=python`` forces the fallback, ``CFMM_BACKEND=cython``
    makes a missing extension an error instead of a silent fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

_mode = os.environ.get("CFMM_BACKEND", "auto").lower()
if _mode not in ("auto", "python", "cython"):
    raise ValueError(f"CFMM_BACKEND must be auto, python or cython: {_mode!r}")

_core = None
if _mode != "python":
    try:
        from . import _core  # type: ignore[attr-defined]
    except ImportError:
        _core = None
        if _mode == "cython":
            raise ImportError(
                "CFMM_BACKEND=cython but the compiled cfmm._core extension "
                "is not available; reinstall with a working C toolchain")


def get(tally=None):
    """Kernel namespace for this call; counted calls use pure Python."""
    if tally is not None or _core is None:
        return _kernels_py
    return _core


def active_name() -> str:
    return "cython" if _core is not None else "python"


def available() -> dict[str, bool]:
    return {"python": True, "cython": _core is not None}


def by_name(name: str):
    """Explicit backend lookup, for the comparison benchmark."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        if _core is None:
            raise ValueError("compiled backend not available")
        return _core
    raise ValueError(f"unknown backend {name!r}")
