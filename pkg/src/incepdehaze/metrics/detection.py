"""Detection metrics: IoU, all-point-interpolated AP/mAP at one IoU threshold, mIoU.

Detection files hold one box per line::

    image_id class_id confidence x_min y_min x_max y_max   # predictions
    image_id class_id x_min y_min x_max y_max              # ground truth
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from ..exceptions import ContractError, UndefinedResultError, ValidationError


@dataclass(frozen=True)
class BoundingBox:
    x_min: float
    y_min: float
    x_max: float
    y_max: float
    class_id: int = 0
    confidence: float = 1.0
    image_id: str = "0"

    @property
    def area(self):
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    def validate(self):
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ContractError(f"degenerate box {self}")
        return self


def iou(p: BoundingBox, g: BoundingBox) -> float:
    p.validate()
    g.validate()
    iw = min(p.x_max, g.x_max) - max(p.x_min, g.x_min)
    ih = min(p.y_max, g.y_max) - max(p.y_min, g.y_min)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (p.area + g.area - inter)


def average_precision(tp_flags, n_gt):
    """All-point interpolated area under the precision/recall curve."""
    tp = np.cumsum(np.asarray(tp_flags, dtype=np.float64))
    fp = np.cumsum(1.0 - np.asarray(tp_flags, dtype=np.float64))
    recall = np.concatenate([[0.0], tp / n_gt, [1.0]])
    precision = np.concatenate([[0.0], tp / np.maximum(tp + fp, 1e-300), [0.0]])
    # precision envelope, right to left
    precision = np.maximum.accumulate(precision[::-1])[::-1]
    steps = np.nonzero(recall[1:] != recall[:-1])[0]
    return float(np.sum((recall[steps + 1] - recall[steps]) * precision[steps + 1]))


def match_class(preds, gts, iou_threshold=0.5):
    """Greedy confidence-ordered matching for one class.

    Returns ``(tp_flags, matched_ious)``; ``tp_flags`` follows predictions in
    descending confidence (stable for ties).
    """
    order = sorted(range(len(preds)), key=lambda i: -preds[i].confidence)
    by_image = defaultdict(list)
    for j, g in enumerate(gts):
        by_image[g.image_id].append(j)
    used = set()
    flags, ious = [], []
    for i in order:
        p = preds[i]
        best, best_j = -1.0, None
        for j in by_image.get(p.image_id, ()):
            if j in used:
                continue
            v = iou(p, gts[j])
            if v >= iou_threshold and v > best:
                best, best_j = v, j
        if best_j is None:
            flags.append(0)
        else:
            used.add(best_j)
            flags.append(1)
            ious.append(best)
    return flags, ious


def evaluate_detections(preds, gts, iou_threshold=0.5):
    """Return ``(mAP, mIoU)``.

    AP is computed for every class that has ground truth; predictions of
    classes without ground truth are ignored. mIoU averages the IoU of all
    true-positive matches (0.0 when there are none).
    """
    if not gts:
        raise UndefinedResultError("no ground-truth boxes; mAP is undefined")
    gt_by_class = defaultdict(list)
    for g in gts:
        gt_by_class[g.class_id].append(g.validate())
    pred_by_class = defaultdict(list)
    for p in preds:
        pred_by_class[p.class_id].append(p.validate())

    aps, all_ious = [], []
    for cls in sorted(gt_by_class):
        flags, ious = match_class(pred_by_class.get(cls, []), gt_by_class[cls], iou_threshold)
        aps.append(average_precision(flags, len(gt_by_class[cls])) if flags else 0.0)
        all_ious.extend(ious)
    miou = float(np.mean(all_ious)) if all_ious else 0.0
    return float(np.mean(aps)), miou


def read_detections(path, with_confidence):
    boxes = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            want = 7 if with_confidence else 6
            if len(parts) != want:
                raise ValidationError(f"{path}:{lineno}: expected {want} fields, got {len(parts)}")
            try:
                if with_confidence:
                    image_id, cls, conf, *coords = parts
                    conf = float(conf)
                else:
                    image_id, cls, *coords = parts
                    conf = 1.0
                x0, y0, x1, y1 = map(float, coords)
                box = BoundingBox(x0, y0, x1, y1, int(cls), conf, image_id)
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from None
            boxes.append(box)
    return boxes


def write_detections(path, boxes, with_confidence):
    with open(path, "w", encoding="utf-8") as fh:
        for b in boxes:
            coords = f"{b.x_min!r} {b.y_min!r} {b.x_max!r} {b.y_max!r}"
            if with_confidence:
                fh.write(f"{b.image_id} {b.class_id} {b.confidence!r} {coords}\n")
            else:
                fh.write(f"{b.image_id} {b.class_id} {coords}\n")
