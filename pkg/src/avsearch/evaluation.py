"""Detection evaluation: greedy matching and average precision.

Matching follows the usual protocol: detections are taken in descending
score order, each consumes the best-overlapping unmatched ground-truth box
of its image (at or above the IoU cutoff), duplicates count as false
positives.  Boxes flagged difficult neither count toward recall nor
penalize detections matched to them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .detection import iou

__all__ = [
    "GroundTruthBox",
    "EvalDetection",
    "MatchResult",
    "match_detections",
    "average_precision",
    "evaluate",
]


@dataclass(frozen=True)
class GroundTruthBox:
    image_id: str
    box: tuple[float, float, float, float]
    difficult: bool = False


@dataclass(frozen=True)
class EvalDetection:
    image_id: str
    score: float
    box: tuple[float, float, float, float]


@dataclass
class MatchResult:
    """Ranked TP/FP flags plus the positive count the recall axis uses."""

    labels: list[bool] = field(default_factory=list)
    scores: list[float] = field(default_factory=list)
    n_positives: int = 0


def match_detections(
    detections: list[EvalDetection],
    truths: list[GroundTruthBox],
    iou_min: float = 0.5,
) -> MatchResult:
    """Greedily assign detections to ground truth, best score first.

    Ties in score break by (image_id, box) so the outcome never depends on
    input order.  Detections whose best match is a difficult box are dropped
    from the ranking entirely rather than counted either way.
    """
    by_image: dict[str, list[tuple[GroundTruthBox, bool]]] = {}
    n_pos = 0
    for gt in truths:
        by_image.setdefault(gt.image_id, []).append((gt, False))
        if not gt.difficult:
            n_pos += 1

    order = sorted(detections, key=lambda d: (-d.score, d.image_id, d.box))
    result = MatchResult(n_positives=n_pos)
    for det in order:
        candidates = by_image.get(det.image_id, [])
        best_i, best_ov = -1, iou_min
        for i, (gt, used) in enumerate(candidates):
            if used:
                continue
            ov = iou(det.box, gt.box)
            if ov >= best_ov:
                best_i, best_ov = i, ov
        if best_i >= 0:
            gt, _ = candidates[best_i]
            candidates[best_i] = (gt, True)
            if gt.difficult:
                continue  # neither TP nor FP
            result.labels.append(True)
        else:
            result.labels.append(False)
        result.scores.append(det.score)
    return result


def average_precision(result: MatchResult, mode: str = "all_points") -> float:
    """AP from a ranked match result.

    ``all_points`` integrates the monotonized precision envelope over
    recall; ``eleven_point`` averages the max precision at recalls
    0.0, 0.1, ..., 1.0.
    """
    if mode not in ("all_points", "eleven_point"):
        raise ValueError(f"unknown AP mode {mode!r}")
    if result.n_positives <= 0:
        raise ValueError("average precision needs at least one positive")
    labels = np.asarray(result.labels, dtype=bool)
    if labels.size == 0:
        return 0.0
    tp = np.cumsum(labels)
    fp = np.cumsum(~labels)
    recall = tp / result.n_positives
    precision = tp / (tp + fp)

    if mode == "eleven_point":
        total = 0.0
        for r in np.linspace(0.0, 1.0, 11):
            mask = recall >= r - 1e-12
            total += float(precision[mask].max()) if mask.any() else 0.0
        return total / 11.0

    # monotone envelope over recall, integrated between recall steps
    mrec = np.concatenate(([0.0], recall, [1.0]))
    mpre = np.concatenate(([0.0], precision, [0.0]))
    for i in range(len(mpre) - 2, -1, -1):
        mpre[i] = max(mpre[i], mpre[i + 1])
    steps = np.nonzero(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[steps + 1] - mrec[steps]) * mpre[steps + 1]))


def evaluate(
    detections: list[EvalDetection],
    truths: list[GroundTruthBox],
    iou_min: float = 0.5,
    mode: str = "all_points",
) -> float:
    return average_precision(match_detections(detections, truths, iou_min), mode)
