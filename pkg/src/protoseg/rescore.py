"""Detection re-ranking by predicted mask quality.

final_score = classification confidence x predicted mask IoU. The
predictor is pluggable; the learned network that would normally supply
the IoU estimate is out of scope, so the provided implementations are an
oracle (true IoU against ground truth) and a constant-one fallback that
leaves the confidence ranking untouched.
"""

from typing import Protocol

import numpy as np

from .detections import DetectionSet
from .maskops import binarize, mask_iou
from .numerics import as_f64


class IouPredictor(Protocol):
    def predict(self, mask: np.ndarray, class_id: int) -> float:
        """Estimate mask IoU in [0, 1] for a cropped pre-threshold mask."""
        ...


class ConstantOne:
    """Identity predictor: final_score == confidence."""

    def predict(self, mask, class_id: int) -> float:
        return 1.0


class OracleGtIou:
    """True mask IoU against ground truth, the upper bound any learned
    predictor could reach.

    Ground-truth masks must share the resolution of the masks being
    scored. The predicted value is the best IoU over same-class gt
    instances; no same-class gt means 0.
    """

    def __init__(self, gt_masks, gt_classes):
        self.gt_masks = np.asarray(gt_masks, dtype=bool)
        self.gt_classes = np.asarray(gt_classes, dtype=np.int64).reshape(-1)

    def predict(self, mask, class_id: int) -> float:
        candidate = binarize(as_f64(mask))
        best = 0.0
        for gt_mask, gt_class in zip(self.gt_masks, self.gt_classes):
            if int(gt_class) != int(class_id):
                continue
            best = max(best, mask_iou(candidate, gt_mask))
        return best


def rescore_detections(dets: DetectionSet, predictor) -> tuple:
    """Attach final scores and re-rank.

    final_score_i = score_i * clamp(predictor(mask_i, class_i), 0, 1),
    then a stable descending sort on final_score. Returns the re-ranked
    set and the number of predictor outputs that needed clamping.
    """
    if dets.masks is None and len(dets):
        raise ValueError("rescore_detections needs assembled masks")
    clamped = 0
    final = np.empty(len(dets), dtype=np.float64)
    for i in range(len(dets)):
        estimate = float(predictor.predict(dets.masks[i], int(dets.classes[i])))
        if estimate < 0.0 or estimate > 1.0:
            clamped += 1
            estimate = min(max(estimate, 0.0), 1.0)
        final[i] = dets.scores[i] * estimate
    order = np.argsort(-final, kind="stable")
    out = dets.take(order)
    out.final_scores = final[order]
    return out, clamped
