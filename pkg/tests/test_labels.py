import pytest
from hypothesis import given
from hypothesis import strategies as st

from helibo.labels import (CornerAnnotation, DegenerateBox, OutOfBounds, convert_annotation,
                           convert_directory, denormalize, parse_label_line, read_annotations)

HEADER = "image,class_id,x_min,y_min,x_max,y_max,img_w,img_h\n"


def test_full_frame():
    rec = convert_annotation(CornerAnnotation(0, 0, 640, 640, 640, 640))
    assert rec.format() == "0 0.500000 0.500000 1.000000 1.000000"
    assert parse_label_line(rec.format()) == parse_label_line("0 0.5 0.5 1.0 1.0")


def test_known_box():
    rec = convert_annotation(CornerAnnotation(64, 64, 192, 320, 640, 640))
    assert parse_label_line(rec.format()) == parse_label_line("0 0.2 0.3 0.2 0.4")


def test_rejects_bad_boxes():
    with pytest.raises(DegenerateBox):
        convert_annotation(CornerAnnotation(10, 10, 10, 20, 640, 640))
    with pytest.raises(OutOfBounds):
        convert_annotation(CornerAnnotation(600, 10, 700, 20, 640, 640))


@st.composite
def annotations(draw):
    w, h = draw(st.integers(16, 4096)), draw(st.integers(16, 4096))
    x0 = draw(st.floats(0, w - 1))
    y0 = draw(st.floats(0, h - 1))
    x1 = draw(st.floats(x0 + 0.5, w))
    y1 = draw(st.floats(y0 + 0.5, h))
    return CornerAnnotation(x0, y0, x1, y1, w, h)


@given(annotations())
def test_round_trip_within_half_pixel(a):
    back = denormalize(parse_label_line(convert_annotation(a).format()), a.img_w, a.img_h)
    for u, v in zip((a.x_min, a.y_min, a.x_max, a.y_max),
                    (back.x_min, back.y_min, back.x_max, back.y_max)):
        assert abs(u - v) <= 0.5


@given(annotations())
def test_exact_round_trip_before_formatting(a):
    back = denormalize(convert_annotation(a), a.img_w, a.img_h)
    assert back.x_min == pytest.approx(a.x_min, abs=1e-9)
    assert back.y_max == pytest.approx(a.y_max, abs=1e-9)


def _write_input(d):
    d.mkdir()
    (d / "a.csv").write_text(HEADER + "img1.jpg,0,0,0,320,320,640,640\n"
                             "img1.jpg,0,100,100,200,300,640,640\n"
                             "img2.png,0,64,64,192,320,640,640\n")
    (d / "b.csv").write_text(HEADER + "img3.jpg,0,10,20,30,40,100,100\n")


def test_convert_directory(tmp_path):
    _write_input(tmp_path / "in")
    out = tmp_path / "out"
    files = convert_directory(tmp_path / "in", out, split=0.5, seed=1)
    assert [f.name for f in files] == ["img1.txt", "img2.txt", "img3.txt"]
    assert (out / "img1.txt").read_text().count("\n") == 2
    names = (out / "train.txt").read_text().split() + (out / "val.txt").read_text().split()
    assert sorted(names) == ["img1.jpg", "img2.png", "img3.jpg"]


def test_convert_directory_byte_stable(tmp_path):
    _write_input(tmp_path / "in")
    convert_directory(tmp_path / "in", tmp_path / "o1", split=0.7, seed=3)
    convert_directory(tmp_path / "in", tmp_path / "o2", split=0.7, seed=3)
    for f in sorted((tmp_path / "o1").iterdir()):
        assert f.read_bytes() == (tmp_path / "o2" / f.name).read_bytes()


def test_missing_columns(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("image,x_min\nfoo,1\n")
    with pytest.raises(ValueError, match="missing columns"):
        read_annotations(p)
