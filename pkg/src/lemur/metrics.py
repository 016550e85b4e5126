"""Task evaluation metrics: classification accuracy, segmentation mean IoU,
and detection mAP at IoU 0.5.

All metrics are pure functions returning a value in [0, 1]. Mean IoU
accumulates intersections and unions across the whole input before dividing,
so splitting a dataset into sub-batches cannot change the result. Detection
AP uses all-point interpolation (exact area under the monotone nonincreasing
precision envelope) with a fixed 0.5 IoU match threshold.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

Box = tuple[float, float, float, float]


class EmptyBatch(ValueError):
    """Classification batch has no elements."""


class NoValidClass(ValueError):
    """No class has a nonzero union (empty segmentation input)."""


class NoGroundTruth(ValueError):
    """mAP is undefined without any ground-truth object."""


@dataclass(frozen=True)
class MaskPair:
    """One predicted/target mask pair over a shared label grid."""

    predicted: np.ndarray
    target: np.ndarray
    num_classes: int

    def __post_init__(self):
        object.__setattr__(self, "predicted", np.asarray(self.predicted))
        object.__setattr__(self, "target", np.asarray(self.target))
        if self.predicted.shape != self.target.shape:
            raise ValueError(
                f"mask shapes differ: {self.predicted.shape} vs {self.target.shape}"
            )
        if self.num_classes < 1:
            raise ValueError(f"num_classes must be >= 1, got {self.num_classes}")
        for grid in (self.predicted, self.target):
            if grid.size and (grid.min() < 0 or grid.max() >= self.num_classes):
                raise ValueError("mask ids must lie in [0, num_classes)")


def _valid_box(box: Box) -> None:
    x1, y1, x2, y2 = box
    if not all(np.isfinite(v) for v in box):
        raise ValueError(f"box coordinates must be finite, got {box}")
    if not (x1 < x2 and y1 < y2):
        raise ValueError(f"box must have positive area, got {box}")


@dataclass(frozen=True)
class Detection:
    class_id: int
    confidence: float
    box: Box

    def __post_init__(self):
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")
        _valid_box(self.box)


@dataclass(frozen=True)
class GroundTruth:
    class_id: int
    box: Box

    def __post_init__(self):
        _valid_box(self.box)


def accuracy(predictions: Sequence[int], targets: Sequence[int]) -> float:
    """Fraction of positions where prediction equals target."""
    if len(predictions) != len(targets):
        raise ValueError(f"length mismatch: {len(predictions)} predictions vs {len(targets)} targets")
    if len(predictions) == 0:
        raise EmptyBatch("cannot score an empty batch")
    correct = sum(1 for p, t in zip(predictions, targets) if p == t)
    return correct / len(predictions)


def mean_iou(batches: Sequence[MaskPair]) -> float:
    """Dataset-level mean IoU.

    Per class, intersection and union counts accumulate across every pair
    first; the result is the mean of I/U over classes whose union is nonzero.
    """
    if not batches:
        raise NoValidClass("no mask pairs given")
    num_classes = batches[0].num_classes
    for pair in batches:
        if pair.num_classes != num_classes:
            raise ValueError("all mask pairs must share num_classes")
    inter = np.zeros(num_classes, dtype=np.int64)
    union = np.zeros(num_classes, dtype=np.int64)
    for pair in batches:
        pred = pair.predicted.ravel()
        tgt = pair.target.ravel()
        for c in range(num_classes):
            p = pred == c
            t = tgt == c
            inter[c] += np.count_nonzero(p & t)
            union[c] += np.count_nonzero(p | t)
    present = union > 0
    if not present.any():
        raise NoValidClass("every class has zero union")
    return float(np.mean(inter[present] / union[present]))


def box_iou(a: Box, b: Box) -> float:
    """Intersection area over union area; 0 for disjoint boxes."""
    ax1, ay1, ax2, ay2 = a
    bx1, by1, bx2, by2 = b
    iw = min(ax2, bx2) - max(ax1, bx1)
    ih = min(ay2, by2) - max(ay1, by1)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    area_a = (ax2 - ax1) * (ay2 - ay1)
    area_b = (bx2 - bx1) * (by2 - by1)
    return inter / (area_a + area_b - inter)


def _average_precision(tp_flags: list[bool], num_gt: int) -> float:
    """All-point interpolated AP from the ranked true/false-positive flags."""
    if num_gt == 0:
        return 0.0
    tp = 0
    recalls: list[float] = []
    precisions: list[float] = []
    for rank, flag in enumerate(tp_flags, start=1):
        tp += int(flag)
        recalls.append(tp / num_gt)
        precisions.append(tp / rank)
    ap = 0.0
    prev_recall = 0.0
    for j, r in enumerate(recalls):
        if r > prev_recall:
            envelope = max(precisions[j:])
            ap += (r - prev_recall) * envelope
            prev_recall = r
    return ap


def map_at_50(detections: Sequence[Detection], ground_truths: Sequence[GroundTruth]) -> float:
    """Mean average precision at IoU >= 0.5.

    Per class, detections are ranked by descending confidence (ties keep
    input order) and greedily matched to the unmatched ground truth with the
    highest IoU >= 0.5 (IoU ties break on the earlier ground-truth index).
    Classes without any ground truth are excluded from the mean.
    """
    if not ground_truths:
        raise NoGroundTruth("no ground-truth objects")
    classes = sorted({gt.class_id for gt in ground_truths})
    aps = []
    for cls in classes:
        gts = [gt for gt in ground_truths if gt.class_id == cls]
        dets = sorted(
            (d for d in detections if d.class_id == cls),
            key=lambda d: -d.confidence,
        )
        matched = [False] * len(gts)
        tp_flags: list[bool] = []
        for det in dets:
            best_iou = 0.0
            best_idx = -1
            for idx, gt in enumerate(gts):
                if matched[idx]:
                    continue
                iou = box_iou(det.box, gt.box)
                if iou >= 0.5 and iou > best_iou:
                    best_iou = iou
                    best_idx = idx
            if best_idx >= 0:
                matched[best_idx] = True
                tp_flags.append(True)
            else:
                tp_flags.append(False)
        aps.append(_average_precision(tp_flags, len(gts)))
    return float(np.mean(aps))
