"""SORT: per-box constant-velocity Kalman filters with IoU assignment.

Kalman state is ``(u, v, s, r, du, dv, ds)``: box center, area, aspect ratio
and the velocities of the first three.  Noise magnitudes follow the original
SORT parameterization, rescaled from 640 px images to normalized units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import permutations

import numpy as np
from scipy.optimize import linear_sum_assignment

from ._kernels import iou_matrix, kf_predict, kf_update
from .geometry import BoundingBox, box_is_valid

_PX = 1.0 / 640.0
_A = _PX * _PX
# per-component scale for (u, v, s, r) variances
_SCALE = np.array([_PX**2, _PX**2, _A**2, 1.0])

R = np.diag([1.0, 1.0, 10.0, 10.0] * _SCALE)
P0 = np.diag(np.concatenate([[10.0, 10.0, 10.0, 10.0] * _SCALE,
                             [1e4, 1e4, 1e4] * _SCALE[:3]]))
Q = np.diag(np.concatenate([[1.0, 1.0, 1.0, 1.0] * _SCALE,
                            [1e-2, 1e-2, 1e-4] * _SCALE[:3]]))


@dataclass(frozen=True)
class TrackerConfig:
    iou_threshold: float = 0.3
    max_age: int = 10
    min_hits: int = 3
    primary_rule: str = "largest"

    def __post_init__(self):
        if not 0.0 < self.iou_threshold < 1.0:
            raise ValueError("iou_threshold must lie in (0, 1)")
        if self.max_age < 1 or self.min_hits < 1:
            raise ValueError("max_age and min_hits must be at least 1")
        if self.primary_rule not in ("largest", "nearest_center"):
            raise ValueError("primary_rule must be 'largest' or 'nearest_center'")


@dataclass
class TrackState:
    x: np.ndarray
    P: np.ndarray
    id: int
    hits: int = 1
    age_since_update: int = 0
    finite: bool = True

    def box_tuple(self) -> tuple[float, float, float, float]:
        u, v, s, r = self.x[:4]
        if s <= 0.0 or r <= 0.0:
            return (u, v, 0.0, 0.0)
        w = math.sqrt(s * r)
        return (u, v, w, s / w)

    def box(self) -> BoundingBox | None:
        t = self.box_tuple()
        return BoundingBox(*t) if box_is_valid(*t) else None


def _measurement(box: BoundingBox) -> np.ndarray:
    return np.array([box.cx, box.cy, box.w * box.h, box.w / box.h])


def new_track(box: BoundingBox, track_id: int) -> TrackState:
    x = np.zeros(7)
    x[:4] = _measurement(box)
    return TrackState(x, P0.copy(), track_id)


def predict(track: TrackState) -> TrackState:
    """Kalman time update (in place); returns the same track."""
    if track.x[2] + track.x[6] <= 0.0:
        track.x[6] = 0.0
    track.finite = kf_predict(track.x, track.P, Q)
    if track.age_since_update > 0:
        track.hits = 0
    track.age_since_update += 1
    return track


def update(track: TrackState, det) -> TrackState:
    """Kalman measurement update with a matched detection (in place)."""
    box = det.box if hasattr(det, "box") else det
    kf_update(track.x, track.P, _measurement(box), R)
    track.hits += 1
    track.age_since_update = 0
    return track


def _boxes(items) -> np.ndarray:
    rows = []
    for it in items:
        if isinstance(it, TrackState):
            rows.append(it.box_tuple())
        else:
            box = it.box if hasattr(it, "box") else it
            rows.append(box.as_tuple())
    return np.array(rows, dtype=float).reshape(-1, 4)


def associate(tracks, detections, iou_threshold: float):
    """Maximum-total-IoU assignment of detections to tracks.

    Returns ``(matches, unmatched_tracks, unmatched_detections)`` where
    ``matches`` holds ``(track_index, detection_index)`` pairs with
    IoU >= ``iou_threshold``.
    """
    nt, nd = len(tracks), len(detections)
    if nt == 0 or nd == 0:
        return [], list(range(nt)), list(range(nd))
    ious = iou_matrix(_boxes(tracks), _boxes(detections))
    if nt == 1 or nd == 1:
        # a single row or column: the optimum is its largest entry
        k = int(np.argmax(ious))
        rows, cols = np.unravel_index([k], ious.shape)
    else:
        rows, cols = linear_sum_assignment(1.0 - ious)
    matches = []
    used_t, used_d = set(), set()
    for t, d in zip(rows, cols):
        if ious[t, d] >= iou_threshold:
            matches.append((int(t), int(d)))
            used_t.add(t)
            used_d.add(d)
    return (matches, [t for t in range(nt) if t not in used_t],
            [d for d in range(nd) if d not in used_d])


def brute_force_assignment(ious: np.ndarray) -> float:
    """Best total IoU over all injective assignments (small instances only)."""
    nt, nd = ious.shape
    if nt > nd:
        return brute_force_assignment(ious.T)
    best = 0.0
    for perm in permutations(range(nd), nt):
        best = max(best, sum(ious[i, j] for i, j in enumerate(perm)))
    return best


@dataclass
class Tracker:
    cfg: TrackerConfig = field(default_factory=TrackerConfig)
    tracks: list[TrackState] = field(default_factory=list)
    next_id: int = 0
    frame: int = 0


def step_tracker(state: Tracker, detections, cfg: TrackerConfig | None = None):
    """Advance the tracker by one frame; returns ``(state, confirmed_tracks)``."""
    cfg = cfg or state.cfg
    state.frame += 1
    for t in state.tracks:
        predict(t)
    state.tracks = [t for t in state.tracks if t.finite]
    matches, _, unmatched = associate(state.tracks, detections, cfg.iou_threshold)
    for ti, di in matches:
        update(state.tracks[ti], detections[di])
    for di in unmatched:
        det = detections[di]
        state.tracks.append(new_track(det.box if hasattr(det, "box") else det, state.next_id))
        state.next_id += 1
    state.tracks = [t for t in state.tracks if t.age_since_update <= cfg.max_age]
    confirmed = [t for t in state.tracks if t.hits >= cfg.min_hits]
    return state, confirmed


def select_primary(confirmed, rule: str = "largest") -> TrackState | None:
    """Pick the track the controller should follow."""
    candidates = [t for t in confirmed if t.box() is not None]
    if not candidates:
        return None
    if rule == "largest":
        return max(candidates, key=lambda t: (t.x[2], -t.id))
    return min(candidates, key=lambda t: ((t.x[0] - 0.5) ** 2 + (t.x[1] - 0.5) ** 2, t.id))


def track_log_rows(frame: int, tracks):
    for t in tracks:
        cx, cy, w, h = t.box_tuple()
        yield frame, t.id, cx, cy, w, h, t.hits
