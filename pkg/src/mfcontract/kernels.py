"""Backend selection for the path kernel.

The compiled Cython kernel is used when it was built; otherwise the numpy
implementation. Both give bit-identical results.
"""
from __future__ import annotations

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_BACKENDS = {"python": _kernels_py}
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled

_active = "compiled" if _compiled is not None else "python"


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def active_backend() -> str:
    return _active


def set_backend(name: str) -> None:
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown or unavailable backend {name!r}; have {available_backends()}")
    _active = name


def simulate_block(*args, backend: str | None = None):
    return _BACKENDS[backend or _active].simulate_block(*args)
