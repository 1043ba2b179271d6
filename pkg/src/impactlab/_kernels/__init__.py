"""Kernel backend selection.

The compiled extension is preferred; the pure-numpy backend is a drop-in,
bit-identical replacement used when the extension is unavailable or when
IMPACTLAB_BACKEND=python is set.
"""

import os

from . import backend_py

_requested = os.environ.get("IMPACTLAB_BACKEND", "").strip().lower()

if _requested in ("python", "numpy", "py"):
    _impl = backend_py
    backend_name = "python"
elif _requested in ("", "compiled", "c", "cython"):
    try:
        from . import _core as _impl

        backend_name = "compiled"
    except ImportError:
        if _requested:
            raise
        _impl = backend_py
        backend_name = "python"
else:
    raise RuntimeError(f"unknown IMPACTLAB_BACKEND={_requested!r}")


def get_backend(name: str):
    """Return a specific backend module ('compiled' or 'python')."""
    if name == "python":
        return backend_py
    if name == "compiled":
        from . import _core

        return _core
    raise ValueError(f"unknown backend {name!r}")


em_path = _impl.em_path
em_paths_terminal = _impl.em_paths_terminal
finite_market = _impl.finite_market
finite_market_zeta = _impl.finite_market_zeta
backward_ceiling_sweep = _impl.backward_ceiling_sweep
fp_sweep = _impl.fp_sweep

__all__ = [
    "backend_name",
    "get_backend",
    "em_path",
    "em_paths_terminal",
    "finite_market",
    "finite_market_zeta",
    "backward_ceiling_sweep",
    "fp_sweep",
]
