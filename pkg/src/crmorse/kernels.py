"""Kernel dispatch: compiled module if importable, numpy fallback otherwise."""
import os

from . import _kernels_py

BACKEND = "python"
if os.environ.get("CRMORSE_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _kernels_py
else:
    _impl = _kernels_py

herm_eval = _impl.herm_eval
radial_roots = _impl.radial_roots

__all__ = ["BACKEND", "herm_eval", "radial_roots"]
