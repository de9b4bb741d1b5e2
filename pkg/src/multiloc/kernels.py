"""Kernel backend selection.

The compiled extension is used when importable; set ``MULTILOC_PURE=1`` to
force the numpy fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels
if os.environ.get("MULTILOC_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]
        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build
        _impl = _pykernels

site_uniforms = _impl.site_uniforms
hausdorff_matrix = _impl.hausdorff_matrix
splitting_widths = _impl.splitting_widths

__all__ = ["BACKEND", "site_uniforms", "hausdorff_matrix", "splitting_widths"]
