"""Kernel dispatch: compiled extension when built, numpy fallback otherwise.

Set LIFTGUARD_PURE=1 to force the fallback (used by the benchmark and tests).
"""
import os

from . import _reference

if os.environ.get("LIFTGUARD_PURE") == "1":
    _impl = _reference
    BACKEND = "reference"
else:
    try:
        from . import _core as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = _reference
        BACKEND = "reference"

zbuffer_min = _impl.zbuffer_min
voxel_centroids = _impl.voxel_centroids
