"""Reference numpy implementations of the per-frame tracking kernels.

Used when the compiled extension is unavailable.  State layout for the
Kalman kernels is ``(u, v, s, r, du, dv, ds)`` with a unit frame step.
"""

import numpy as np

F = np.eye(7)
F[0, 4] = F[1, 5] = F[2, 6] = 1.0
H = np.eye(4, 7)
_I7 = np.eye(7)


def kf_predict(x, P, Q):
    """Constant-velocity time update in place; False if the state went non-finite."""
    x[:] = F @ x
    P[:] = F @ P @ F.T + Q
    return bool(np.isfinite(x).all())


def kf_update(x, P, z, R):
    """Measurement update on ``(u, v, s, r)``, Joseph form, in place."""
    S = P[:4, :4] + R
    np.linalg.cholesky(S)  # raises LinAlgError when S is not PD
    PHt = P[:, :4]
    K = np.linalg.solve(S, PHt.T).T
    x += K @ (z - x[:4])
    A = _I7 - K @ H
    Pn = A @ P @ A.T + K @ R @ K.T
    P[:] = 0.5 * (Pn + Pn.T)


def iou_matrix(a, b):
    """Pairwise IoU between rows of ``a`` and ``b`` given as ``(cx, cy, w, h)``."""
    a = np.asarray(a, dtype=float).reshape(-1, 4)
    b = np.asarray(b, dtype=float).reshape(-1, 4)
    ax0 = (a[:, 0] - a[:, 2] / 2)[:, None]
    ax1 = (a[:, 0] + a[:, 2] / 2)[:, None]
    ay0 = (a[:, 1] - a[:, 3] / 2)[:, None]
    ay1 = (a[:, 1] + a[:, 3] / 2)[:, None]
    bx0 = b[:, 0] - b[:, 2] / 2
    bx1 = b[:, 0] + b[:, 2] / 2
    by0 = b[:, 1] - b[:, 3] / 2
    by1 = b[:, 1] + b[:, 3] / 2
    iw = np.clip(np.minimum(ax1, bx1) - np.maximum(ax0, bx0), 0.0, None)
    ih = np.clip(np.minimum(ay1, by1) - np.maximum(ay0, by0), 0.0, None)
    inter = iw * ih
    union = (a[:, 2] * a[:, 3])[:, None] + b[:, 2] * b[:, 3] - inter
    return np.where(inter > 0.0, inter / np.where(union > 0, union, 1.0), 0.0)
