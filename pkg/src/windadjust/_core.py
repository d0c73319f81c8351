"""Kernel backend selection.

The compiled extension is preferred; set ``WINDADJUST_PURE=1`` to force the
numpy fallback (the benchmark and the equivalence tests import both).
"""
import os

from . import _fallback

fallback = _fallback
compiled = None

if os.environ.get("WINDADJUST_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as compiled
    except ImportError:
        compiled = None

backend = compiled if compiled is not None else fallback
BACKEND = "compiled" if compiled is not None else "numpy"

analysis_step = backend.analysis_step
synthesis_step = backend.synthesis_step
irls_quantile = backend.irls_quantile
soft_threshold_blocks = backend.soft_threshold_blocks
