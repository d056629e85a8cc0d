"""Kernel backend selection.

The compiled extension is preferred when present; ``YOKAI_PURE_PYTHON=1``
forces the pure-Python fallback. Both expose the same functions, and the
test suite checks them against each other whenever both are importable.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import pycore


def _load_compiled() -> ModuleType | None:
    try:
        from . import _ccore  # type: ignore[attr-defined]
    except ImportError:
        return None
    return _ccore


if os.environ.get("YOKAI_PURE_PYTHON") == "1":
    _impl: ModuleType = pycore
else:
    _impl = _load_compiled() or pycore

adjacency_matrix = _impl.adjacency_matrix
is_connected = _impl.is_connected
legal_targets = _impl.legal_targets
legal_targets_many = _impl.legal_targets_many
colour_connected_flags = _impl.colour_connected_flags
count_complete_colour_clusters = _impl.count_complete_colour_clusters


def backend_name() -> str:
    """Name of the kernel backend in use: 'compiled' or 'python'."""
    return "compiled" if _impl.NAME == "compiled" else "python"


def available_backends() -> list[str]:
    names = ["python"]
    if _load_compiled() is not None:
        names.insert(0, "compiled")
    return names


def get_backend(name: str) -> ModuleType:
    """Fetch a specific backend module by name, for side-by-side comparison."""
    if name == "python":
        return pycore
    if name == "compiled":
        mod = _load_compiled()
        if mod is None:
            raise ImportError("compiled kernels are not built in this environment")
        return mod
    raise ValueError(f"unknown kernel backend {name!r}")
