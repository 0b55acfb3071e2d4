"""TAB-delimited dataset manifests and detection dump files.

Manifest lines: ``image_path<TAB>class<TAB>x0,y0,x1,y1`` with one box per
line (an image repeats for each of its boxes).  Negative images carry the
class ``-`` and no box.  Ground-truth manifests may append ``difficult=1``
to a box line.  Detection dumps: ``image_id<TAB>score<TAB>x0,y0,x1,y1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .evaluation import EvalDetection, GroundTruthBox
from .validation import check_box

__all__ = [
    "ManifestRow",
    "ManifestError",
    "load_manifest",
    "training_sets",
    "ground_truth",
    "write_detections",
    "load_detections",
]


class ManifestError(ValueError):
    """Raised for unparseable manifest lines."""


@dataclass(frozen=True)
class ManifestRow:
    image_path: str
    class_name: str
    box: tuple[float, float, float, float] | None
    difficult: bool = False

    @property
    def is_negative(self) -> bool:
        return self.class_name == "-"


def _parse_box(text: str, where: str) -> tuple[float, float, float, float]:
    parts = text.split(",")
    if len(parts) != 4:
        raise ManifestError(f"{where}: box needs 4 comma-separated values, got {text!r}")
    try:
        return check_box(float(v) for v in parts)
    except ValueError as exc:
        raise ManifestError(f"{where}: {exc}") from exc


def load_manifest(path) -> list[ManifestRow]:
    rows = []
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = line.split("\t")
            where = f"{path.name}:{line_no}"
            if len(fields) < 2:
                raise ManifestError(f"{where}: need at least image and class")
            image_path, class_name = fields[0].strip(), fields[1].strip()
            if not image_path or not class_name:
                raise ManifestError(f"{where}: empty image path or class")
            if class_name == "-":
                rows.append(ManifestRow(image_path, class_name, None))
                continue
            if len(fields) < 3:
                raise ManifestError(f"{where}: positive row needs a box")
            box = _parse_box(fields[2].strip(), where)
            difficult = any(f.strip() == "difficult=1" for f in fields[3:])
            rows.append(ManifestRow(image_path, class_name, box, difficult))
    return rows


def training_sets(
    rows: list[ManifestRow], class_name: str
) -> tuple[list[tuple[str, list[tuple[float, float, float, float]]]], list[str]]:
    """Split manifest rows into (positives, negative paths) for one class.

    Positives come back grouped by image, in first-appearance order;
    difficult boxes are left out of training.
    """
    grouped: dict[str, list] = {}
    order: list[str] = []
    negatives: list[str] = []
    for row in rows:
        if row.is_negative:
            if row.image_path not in negatives:
                negatives.append(row.image_path)
        elif row.class_name == class_name and not row.difficult:
            if row.image_path not in grouped:
                grouped[row.image_path] = []
                order.append(row.image_path)
            grouped[row.image_path].append(row.box)
    return [(p, grouped[p]) for p in order], negatives


def ground_truth(rows: list[ManifestRow], class_name: str) -> list[GroundTruthBox]:
    return [
        GroundTruthBox(row.image_path, row.box, row.difficult)
        for row in rows
        if not row.is_negative and row.class_name == class_name
    ]


def write_detections(path, detections: list[EvalDetection]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for det in detections:
            box = ",".join(repr(v) for v in det.box)
            fh.write(f"{det.image_id}\t{det.score!r}\t{box}\n")


def load_detections(path) -> list[EvalDetection]:
    out = []
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise ManifestError(f"{path.name}:{line_no}: need id, score, box")
            box = _parse_box(fields[2].strip(), f"{path.name}:{line_no}")
            out.append(EvalDetection(fields[0].strip(), float(fields[1]), box))
    return out
