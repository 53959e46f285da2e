"""Kernel backend selection.

The compiled extension (``streamtree._core``) is used when importable; the
pure-Python fallback (``streamtree._pycore``) otherwise. The environment
variable ``STREAMTREE_BACKEND`` forces the choice: ``auto`` (default),
``cython``, or ``python``. Both kernels produce bit-identical statistics, so
the selection only affects throughput.
"""

from __future__ import annotations

import os

from . import _pycore

try:
    from . import _core
except ImportError:  # source tree without a built extension
    _core = None

ENV_VAR = "STREAMTREE_BACKEND"
_ALIASES = {
    "auto": "auto",
    "": "auto",
    "cython": "cython",
    "compiled": "cython",
    "c": "cython",
    "python": "python",
    "pure": "python",
    "py": "python",
}


def available_backends() -> tuple[str, ...]:
    return ("cython", "python") if _core is not None else ("python",)


def default_backend() -> str:
    name = _ALIASES.get(os.environ.get(ENV_VAR, "auto").lower())
    if name is None:
        raise ValueError(
            f"unknown {ENV_VAR} value {os.environ.get(ENV_VAR)!r}; "
            "expected auto, cython, or python"
        )
    if name == "auto":
        return "cython" if _core is not None else "python"
    return name


def resolve(backend: str | None = None) -> tuple:
    """Resolve a backend request to (name, LeafStats class)."""
    name = backend if backend is not None else default_backend()
    name = _ALIASES.get(name.lower(), name)
    if name == "auto":
        name = "cython" if _core is not None else "python"
    if name == "cython":
        if _core is None:
            raise ImportError(
                "compiled kernel requested but streamtree._core is not built; "
                "reinstall the package or use the python backend"
            )
        return "cython", _core.LeafStats
    if name == "python":
        return "python", _pycore.LeafStats
    raise ValueError(f"unknown backend {backend!r}")


def leaf_stats_class(backend: str | None = None):
    return resolve(backend)[1]
