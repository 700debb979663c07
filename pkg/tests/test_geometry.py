import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helibo.geometry import (AltitudeTooLow, BoundingBox, CameraModel, Helipad, InvalidBox,
                             WorldPose, box_is_valid, frame_overlap, iou, pad_is_operable,
                             project_pad)


def raster_iou(a, b, n=1000):
    """Pixel-counting IoU on an n x n grid over the unit square."""
    c = (np.arange(n) + 0.5) / n
    X, Y = np.meshgrid(c, c, indexing="ij")

    def mask(box):
        x0, y0, x1, y1 = box.corners()
        return (X >= x0) & (X < x1) & (Y >= y0) & (Y < y1)

    ma, mb = mask(a), mask(b)
    return (ma & mb).sum() / (ma | mb).sum()


@st.composite
def boxes(draw):
    w = draw(st.floats(0.01, 0.6))
    h = draw(st.floats(0.01, 0.6))
    cx = draw(st.floats(w / 2, 1 - w / 2))
    cy = draw(st.floats(h / 2, 1 - h / 2))
    return BoundingBox(cx, cy, w, h)


def test_iou_identical_and_disjoint():
    a = BoundingBox(0.3, 0.4, 0.2, 0.1)
    assert iou(a, a) == 1.0
    assert iou(a, BoundingBox(0.8, 0.8, 0.1, 0.1)) == 0.0


def test_iou_quarter_offset_matches_raster():
    a = BoundingBox(0.25, 0.25, 0.5, 0.5)
    b = BoundingBox(0.5, 0.5, 0.5, 0.5)
    # frozen from the raster oracle below
    assert iou(a, b) == pytest.approx(1.0 / 7.0, abs=1e-12)
    assert raster_iou(a, b) == pytest.approx(iou(a, b), abs=1e-3)


def test_iou_random_pairs_match_raster():
    rng = np.random.default_rng(5)
    for _ in range(10):
        w, h = rng.uniform(0.1, 0.5, 2)
        a = BoundingBox(*rng.uniform(0.3, 0.7, 2), w, h)
        w, h = rng.uniform(0.1, 0.5, 2)
        b = BoundingBox(*rng.uniform(0.3, 0.7, 2), w, h)
        assert raster_iou(a, b) == pytest.approx(iou(a, b), abs=5e-3)


@given(boxes(), boxes())
def test_iou_symmetric_and_bounded(a, b):
    assert iou(a, b) == iou(b, a)
    assert 0.0 <= iou(a, b) <= 1.0


@given(boxes())
def test_iou_self_is_one(a):
    assert iou(a, a) == 1.0


def test_box_validation():
    assert not box_is_valid(0.5, 0.5, 0.0, 0.1)
    assert not box_is_valid(0.5, 0.5, -0.1, 0.1)
    assert not box_is_valid(1.3, 0.5, 0.2, 0.2)
    # a box may overflow the frame by the tolerance
    assert box_is_valid(1.1, 0.5, 0.2, 0.2)
    with pytest.raises(InvalidBox):
        BoundingBox(0.5, 0.5, 2.0, 2.0)


def test_frame_overlap():
    assert frame_overlap(BoundingBox(0.5, 0.5, 0.2, 0.2)) == pytest.approx(1.0)
    assert frame_overlap(BoundingBox(1.0, 0.5, 0.2, 0.2)) == pytest.approx(0.5)


def test_focal_length_from_fov():
    assert CameraModel().focal == pytest.approx(0.5)
    assert CameraModel(fov_deg=60).focal == pytest.approx(0.5 / math.tan(math.radians(30)))


def test_project_above_pad_is_centered():
    box = project_pad(WorldPose(0, 0, 40), Helipad(), CameraModel())
    assert box.cx == 0.5 and box.cy == 0.5


def test_project_known_size():
    box = project_pad(WorldPose(0, 0, 50), Helipad(side_m=5.0), CameraModel())
    assert box.w == pytest.approx(0.05) and box.h == pytest.approx(0.05)


def test_project_axes():
    cam, pad = CameraModel(), Helipad()
    # pad east of the vehicle shows on the right; pad north shows at the top
    east = project_pad(WorldPose(-5, 0, 20), pad, cam)
    north = project_pad(WorldPose(0, -5, 20), pad, cam)
    assert east.cx > 0.5 and east.cy == 0.5
    assert north.cy < 0.5 and north.cx == 0.5


def test_doubling_altitude_quarters_area():
    cam, pad = CameraModel(), Helipad()
    a1 = project_pad(WorldPose(3, -2, 25), pad, cam).area()
    a2 = project_pad(WorldPose(3, -2, 50), pad, cam).area()
    assert a2 == pytest.approx(a1 / 4, rel=1e-12)


def test_out_of_view_and_low_altitude():
    cam, pad = CameraModel(), Helipad()
    assert project_pad(WorldPose(100, 0, 20), pad, cam) is None
    with pytest.raises(AltitudeTooLow):
        project_pad(WorldPose(0, 0, 0.05), pad, cam)


@settings(max_examples=50)
@given(st.floats(-20, 20), st.floats(-20, 20), st.floats(5, 100),
       st.floats(-50, 50), st.floats(-50, 50))
def test_projection_translation_invariant(x, y, z, dx, dy):
    cam = CameraModel()
    a = project_pad(WorldPose(x, y, z), Helipad(), cam)
    b = project_pad(WorldPose(x + dx, y + dy, z), Helipad(WorldPose(dx, dy, 0.0)), cam)
    if a is None:
        assert b is None
    else:
        assert b.as_tuple() == pytest.approx(a.as_tuple(), abs=1e-9)


@settings(max_examples=50)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(10, 80), st.floats(1.01, 3.0))
def test_area_decreases_with_altitude(x, y, z, k):
    cam, pad = CameraModel(), Helipad()
    lo = project_pad(WorldPose(x, y, z), pad, cam)
    hi = project_pad(WorldPose(x, y, z * k), pad, cam)
    if lo is not None and hi is not None:
        assert hi.area() < lo.area()


def test_pad_operability_at_touchdown():
    cam = CameraModel()
    # the center box covers roughly 50 square feet at touchdown height
    sqft = cam.ground_footprint(cam.center_box, cam.mount_height) / 0.09290304
    assert sqft == pytest.approx(50, abs=1)
    assert pad_is_operable(Helipad(side_m=2.0), cam)
    assert not pad_is_operable(Helipad(side_m=2.5), cam)
    with pytest.raises(ValueError):
        WorldPose(0, 0, -1)
