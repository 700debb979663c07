"""Corner-format box annotations to normalized center-format label files."""

from __future__ import annotations

import csv
from collections import OrderedDict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

CSV_COLUMNS = ("image", "class_id", "x_min", "y_min", "x_max", "y_max", "img_w", "img_h")


class DegenerateBox(ValueError):
    pass


class OutOfBounds(ValueError):
    pass


@dataclass(frozen=True)
class CornerAnnotation:
    x_min: float
    y_min: float
    x_max: float
    y_max: float
    img_w: int
    img_h: int
    class_id: int = 0


@dataclass(frozen=True)
class LabelRecord:
    class_id: int
    x_center: float
    y_center: float
    width: float
    height: float

    def format(self) -> str:
        return (f"{self.class_id} {self.x_center:.6f} {self.y_center:.6f} "
                f"{self.width:.6f} {self.height:.6f}")


def convert_annotation(a: CornerAnnotation) -> LabelRecord:
    if a.x_min >= a.x_max or a.y_min >= a.y_max:
        raise DegenerateBox(f"empty box {a}")
    if a.x_min < 0 or a.y_min < 0 or a.x_max > a.img_w or a.y_max > a.img_h:
        raise OutOfBounds(f"box exceeds {a.img_w}x{a.img_h} image: {a}")
    return LabelRecord(
        a.class_id,
        (a.x_min + a.x_max) / (2 * a.img_w),
        (a.y_min + a.y_max) / (2 * a.img_h),
        (a.x_max - a.x_min) / a.img_w,
        (a.y_max - a.y_min) / a.img_h,
    )


def denormalize(rec: LabelRecord, img_w: int, img_h: int) -> CornerAnnotation:
    half_w, half_h = rec.width * img_w / 2, rec.height * img_h / 2
    cx, cy = rec.x_center * img_w, rec.y_center * img_h
    return CornerAnnotation(cx - half_w, cy - half_h, cx + half_w, cy + half_h,
                            img_w, img_h, rec.class_id)


def parse_label_line(line: str) -> LabelRecord:
    cid, *vals = line.split()
    return LabelRecord(int(cid), *(float(v) for v in vals))


def read_annotations(path: Path) -> "OrderedDict[str, list[CornerAnnotation]]":
    """Annotations grouped per image, in first-appearance order."""
    groups: OrderedDict[str, list[CornerAnnotation]] = OrderedDict()
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(CSV_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            ann = CornerAnnotation(float(row["x_min"]), float(row["y_min"]),
                                   float(row["x_max"]), float(row["y_max"]),
                                   int(row["img_w"]), int(row["img_h"]),
                                   int(row["class_id"]))
            groups.setdefault(row["image"], []).append(ann)
    return groups


def convert_directory(input_dir: Path, output_dir: Path, split: float | None = None,
                      seed: int = 0) -> list[Path]:
    """Convert every ``*.csv`` under ``input_dir`` into per-image ``.txt`` files.

    With ``split`` set, also writes ``train.txt`` and ``val.txt`` listing the
    images after a seeded shuffle (``split`` is the training fraction).
    """
    output_dir.mkdir(parents=True, exist_ok=True)
    images: OrderedDict[str, list[CornerAnnotation]] = OrderedDict()
    for csv_path in sorted(Path(input_dir).glob("*.csv")):
        for image, anns in read_annotations(csv_path).items():
            images.setdefault(image, []).extend(anns)
    written = []
    for image, anns in images.items():
        out = output_dir / (Path(image).stem + ".txt")
        lines = [convert_annotation(a).format() for a in anns]
        out.write_text("\n".join(lines) + "\n")
        written.append(out)
    if split is not None:
        if not 0.0 < split < 1.0:
            raise ValueError("split must lie in (0, 1)")
        names = list(images)
        order = np.random.default_rng(seed).permutation(len(names))
        n_train = int(round(split * len(names)))
        train = [names[i] for i in order[:n_train]]
        val = [names[i] for i in order[n_train:]]
        (output_dir / "train.txt").write_text("".join(n + "\n" for n in train))
        (output_dir / "val.txt").write_text("".join(n + "\n" for n in val))
    return written
