"""Backend selection for the numerical kernels.

The compiled extension is used when it imports; setting the environment
variable ``UQR_WEB_LAB_PURE=1`` forces the numpy fallback.  ``BACKEND``
names the active implementation.
"""
from __future__ import annotations

import os

from . import _kernels_py

_NAMES = (
    "poly_iterate",
    "poly_log_abs",
    "quad_newton_ratio",
    "aberth_correction",
    "gauss_linking",
    "winding_numbers",
    "voxelize",
    "flood_fill6",
)


def _load():
    if os.environ.get("UQR_WEB_LAB_PURE") == "1":
        return _kernels_py, "python"
    try:
        from . import _kernels_c  # type: ignore[attr-defined]
    except ImportError:
        return _kernels_py, "python"
    return _kernels_c, "cython"


_impl, BACKEND = _load()

poly_iterate = _impl.poly_iterate
poly_log_abs = _impl.poly_log_abs
quad_newton_ratio = _impl.quad_newton_ratio
aberth_correction = _impl.aberth_correction
gauss_linking = _impl.gauss_linking
winding_numbers = _impl.winding_numbers
voxelize = _impl.voxelize
flood_fill6 = _impl.flood_fill6


def implementations():
    """Return ``{name: module}`` for every importable backend."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels_c  # type: ignore[attr-defined]

        out["cython"] = _kernels_c
    except ImportError:
        pass
    return out


__all__ = ["BACKEND", "implementations", *_NAMES]
