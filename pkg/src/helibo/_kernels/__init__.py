"""Per-frame tracking kernels: compiled when available, numpy otherwise.

Set ``HELIBO_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

if os.environ.get("HELIBO_PURE_PYTHON"):
    from ._pykernels import iou_matrix, kf_predict, kf_update
    BACKEND = "python"
else:
    try:
        from ._ckernels import iou_matrix, kf_predict, kf_update
        BACKEND = "cython"
    except ImportError:
        from ._pykernels import iou_matrix, kf_predict, kf_update
        BACKEND = "python"

__all__ = ["BACKEND", "iou_matrix", "kf_predict", "kf_update"]
