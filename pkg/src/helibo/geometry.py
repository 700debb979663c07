"""Image-space boxes, the downward pinhole camera and helipad projection.

Boxes use the normalized center format ``(cx, cy, w, h)``: image x grows to
the right (world east) and image y grows downward (world south).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

OVERFLOW = 0.25
MAX_AREA = (1.0 + OVERFLOW) ** 2
MIN_CAMERA_ALT = 0.1
SQFT_TO_M2 = 0.09290304


class InvalidBox(ValueError):
    pass


class AltitudeTooLow(ValueError):
    pass


def box_is_valid(cx: float, cy: float, w: float, h: float) -> bool:
    if not (w > 0.0 and h > 0.0):
        return False
    if w * h > MAX_AREA:
        return False
    lo, hi = -OVERFLOW, 1.0 + OVERFLOW
    return (cx - w / 2 >= lo and cx + w / 2 <= hi
            and cy - h / 2 >= lo and cy + h / 2 <= hi)


@dataclass(frozen=True, slots=True)
class BoundingBox:
    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        if not box_is_valid(self.cx, self.cy, self.w, self.h):
            raise InvalidBox(f"invalid box {self.cx, self.cy, self.w, self.h}")

    def area(self) -> float:
        return self.w * self.h

    def corners(self) -> tuple[float, float, float, float]:
        return (self.cx - self.w / 2, self.cy - self.h / 2,
                self.cx + self.w / 2, self.cy + self.h / 2)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.cx, self.cy, self.w, self.h)


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes; 0 for disjoint boxes."""
    ax0, ay0, ax1, ay1 = a.corners()
    bx0, by0, bx1, by1 = b.corners()
    iw = min(ax1, bx1) - max(ax0, bx0)
    ih = min(ay1, by1) - max(ay0, by0)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    # areas from the same corner differences, so iou(a, a) == 1 exactly
    area_a = (ax1 - ax0) * (ay1 - ay0)
    area_b = (bx1 - bx0) * (by1 - by0)
    return inter / (area_a + area_b - inter)


def frame_overlap(box: BoundingBox) -> float:
    """Fraction of the box area that lies inside the unit image frame."""
    x0, y0, x1, y1 = box.corners()
    iw = min(x1, 1.0) - max(x0, 0.0)
    ih = min(y1, 1.0) - max(y0, 0.0)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    return iw * ih / box.area()


@dataclass(frozen=True, slots=True)
class WorldPose:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not self.z >= 0.0:
            raise ValueError(f"altitude must be non-negative, got {self.z}")


def _centered_box() -> BoundingBox:
    return BoundingBox(0.5, 0.5, 0.5, 0.5)


@dataclass(frozen=True)
class CameraModel:
    """Square-image pinhole camera looking straight down.

    ``mount_height`` is the camera height above the pad plane when the vehicle
    sits on the ground, so the camera altitude is ``vehicle z + mount_height``.
    At that height the default 0.5-wide center box covers ~50 ft^2 of ground.
    """

    fov_deg: float = 90.0
    image_px: int = 640
    center_box: BoundingBox = field(default_factory=_centered_box)
    mount_height: float = 2.16

    def __post_init__(self):
        if not 0.0 < self.fov_deg < 180.0:
            raise ValueError("fov_deg must lie in (0, 180)")
        if self.center_box.cx != 0.5 or self.center_box.cy != 0.5:
            raise ValueError("center box must be centered in the frame")
        if self.mount_height < 0.0:
            raise ValueError("mount_height must be non-negative")

    @property
    def focal(self) -> float:
        return 0.5 / math.tan(math.radians(self.fov_deg) / 2.0)

    def ground_footprint(self, box: BoundingBox, altitude: float) -> float:
        """Ground area in m^2 covered by ``box`` seen from ``altitude``."""
        return (box.w * altitude / self.focal) * (box.h * altitude / self.focal)

    def camera_pose(self, vehicle: WorldPose) -> WorldPose:
        return WorldPose(vehicle.x, vehicle.y, vehicle.z + self.mount_height)


@dataclass(frozen=True)
class Helipad:
    center: WorldPose = field(default_factory=lambda: WorldPose(0.0, 0.0, 0.0))
    side_m: float = 2.0

    def __post_init__(self):
        if self.center.z != 0.0:
            raise ValueError("helipad must lie on the ground plane")
        if not self.side_m > 0.0:
            raise ValueError("side_m must be positive")


def pad_is_operable(pad: Helipad, cam: CameraModel) -> bool:
    """True when the pad stays smaller than the center box at touchdown."""
    touchdown = cam.ground_footprint(cam.center_box, cam.mount_height)
    return pad.side_m ** 2 < touchdown


def project_pad(pose: WorldPose, pad: Helipad, cam: CameraModel) -> BoundingBox | None:
    """Project the pad into the image of a camera located at ``pose``.

    Returns None when less than a quarter of the projected box lies inside
    the frame or the box overflows the frame by more than the tolerance.
    """
    z = pose.z
    if z <= MIN_CAMERA_ALT:
        raise AltitudeTooLow(f"camera altitude {z} m is at or below {MIN_CAMERA_ALT} m")
    f = cam.focal
    cx = 0.5 + f * (pad.center.x - pose.x) / z
    cy = 0.5 - f * (pad.center.y - pose.y) / z
    side = f * pad.side_m / z
    if not box_is_valid(cx, cy, side, side):
        return None
    box = BoundingBox(cx, cy, side, side)
    if frame_overlap(box) < OVERFLOW:
        return None
    return box
