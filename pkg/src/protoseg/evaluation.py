"""Average-precision evaluation over box or mask IoU.

Protocol: per class and IoU threshold, detections are ranked by score
globally, greedily matched to the not-yet-matched same-class gt in their
image with the highest IoU at or above the threshold, and the resulting
precision-recall curve is summarized by 101-point interpolated AP.
Classes with no ground truth are omitted; the headline AP is the mean
over classes present in the ground truth and over thresholds
0.50, 0.55, ... 0.95.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError
from .geometry import pairwise_iou
from .maskops import mask_iou, rle_area, rle_decode
from .numerics import as_f64

DEFAULT_THRESHOLDS = tuple(np.round(np.arange(0.50, 0.96, 0.05), 2))
RECALL_GRID = np.linspace(0.0, 1.0, 101)
MAX_DETS_PER_IMAGE = 100

# COCO pixel-area bounds for the optional size breakdown.
AREA_RANGES = {
    "small": (0.0, 32.0**2),
    "medium": (32.0**2, 96.0**2),
    "large": (96.0**2, float("inf")),
}


@dataclass
class ApReport:
    ap: float
    ap50: float
    ap75: float
    per_class: dict  # class id -> AP averaged over thresholds
    per_threshold: dict  # threshold -> AP averaged over classes
    num_gts: int
    num_dets: int
    ap_by_area: dict = field(default_factory=dict)  # name -> AP, optional

    def as_dict(self) -> dict:
        return {
            "ap": self.ap,
            "ap50": self.ap50,
            "ap75": self.ap75,
            "per_class": {str(k): v for k, v in sorted(self.per_class.items())},
            "per_threshold": {f"{k:.2f}": v for k, v in sorted(self.per_threshold.items())},
            "num_gts": self.num_gts,
            "num_dets": self.num_dets,
            "ap_by_area": dict(self.ap_by_area),
        }


def _xywh_to_corner(b) -> np.ndarray:
    b = as_f64(b).reshape(4)
    return np.array([b[0], b[1], b[0] + b[2], b[1] + b[3]], dtype=np.float64)


def interpolated_ap(is_tp, num_gt: int) -> float:
    """101-point interpolated AP from ranked per-detection TP flags.

    Flags must already follow the ranking order (best score first).
    Precision at each recall grid point r is the max precision among
    curve points with recall >= r.
    """
    if num_gt == 0:
        return 0.0
    is_tp = np.asarray(is_tp, dtype=bool)
    if is_tp.size == 0:
        return 0.0
    tp = np.cumsum(is_tp)
    fp = np.cumsum(~is_tp)
    recall = tp / num_gt
    precision = tp / (tp + fp)
    # Envelope: best precision achievable at recall >= r.
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    idx = np.searchsorted(recall, RECALL_GRID, side="left")
    interp = np.where(idx < len(envelope), envelope[np.minimum(idx, len(envelope) - 1)], 0.0)
    return float(interp.mean())


def _gather_gts(gt_data: dict, iou_kind: str):
    """Index gt annotations by (image_id, class), decoding what the IoU needs."""
    try:
        annotations = gt_data["annotations"]
    except (TypeError, KeyError) as exc:
        raise FormatError("gt data lacks an annotations list") from exc
    by_image_class: dict = {}
    areas: dict = {}
    classes = set()
    for ann in annotations:
        try:
            image_id = str(ann["image_id"])
            cls = int(ann["category_id"])
            classes.add(cls)
            if iou_kind == "mask":
                shape = rle_decode(ann["segmentation"])
                area = float(rle_area(ann["segmentation"]))
            else:
                shape = _xywh_to_corner(ann["bbox"])
                b = ann["bbox"]
                area = float(b[2]) * float(b[3])
        except (KeyError, TypeError) as exc:
            raise FormatError(f"gt annotation is malformed: {exc}") from exc
        by_image_class.setdefault((image_id, cls), []).append(shape)
        areas.setdefault((image_id, cls), []).append(area)
    return by_image_class, areas, sorted(classes)


def _detection_iou(det, gt_shapes, iou_kind: str) -> np.ndarray:
    if iou_kind == "mask":
        det_mask = rle_decode(det["mask"])
        return np.array([mask_iou(det_mask, g) for g in gt_shapes], dtype=np.float64)
    det_box = _xywh_to_corner(det["bbox"])
    return pairwise_iou(det_box, np.stack(gt_shapes))[0]


def _det_area(det, iou_kind: str) -> float:
    if iou_kind == "mask":
        return float(rle_area(det["mask"]))
    b = det["bbox"]
    return float(b[2]) * float(b[3])


def _rank_and_cap(dets: list, score_key: str, max_dets: int) -> list:
    """Per image keep the top max_dets by score, then rank globally."""
    per_image: dict = {}
    for i, det in enumerate(dets):
        per_image.setdefault(str(det["image_id"]), []).append((i, det))
    surviving = []
    for image_id in sorted(per_image):
        rows = per_image[image_id]
        scores = np.array([float(d[score_key]) for _, d in rows])
        order = np.argsort(-scores, kind="stable")[:max_dets]
        surviving.extend(rows[j] for j in order)
    scores = np.array([float(d[score_key]) for _, d in surviving])
    original = np.array([i for i, _ in surviving])
    # Global rank by score descending, original input order breaking ties.
    order = np.lexsort((original, -scores))
    return [surviving[j][1] for j in order]


def evaluate_ap(
    detections: list,
    gt_data: dict,
    iou_kind: str = "mask",
    thresholds=DEFAULT_THRESHOLDS,
    score_key: str = "final_score",
    max_dets: int = MAX_DETS_PER_IMAGE,
    with_area_breakdown: bool = False,
) -> ApReport:
    """Score detection records against gt annotations.

    detections: list of dicts with image_id, category, score/final_score,
    bbox [x, y, w, h], and mask (run-length dict) when iou_kind='mask'.
    gt_data: dict with images/annotations/categories lists.
    """
    if iou_kind not in ("box", "mask"):
        raise ValueError(f"iou_kind must be 'box' or 'mask', got {iou_kind!r}")
    gt_index, gt_areas, classes = _gather_gts(gt_data, iou_kind)
    ranked = _rank_and_cap(list(detections), score_key, max_dets)

    thresholds = [float(t) for t in thresholds]
    per_class_threshold: dict = {}
    for cls in classes:
        class_dets = [d for d in ranked if int(d["category"]) == cls]
        num_gt = sum(len(v) for (img, c), v in gt_index.items() if c == cls)
        # IoUs against each gt list are threshold-independent; compute once.
        iou_rows = []
        for det in class_dets:
            key = (str(det["image_id"]), cls)
            gts = gt_index.get(key, [])
            iou_rows.append(_detection_iou(det, gts, iou_kind) if gts else np.zeros(0))
        for thr in thresholds:
            used: dict = {}
            flags = np.zeros(len(class_dets), dtype=bool)
            for di, det in enumerate(class_dets):
                key = (str(det["image_id"]), cls)
                ious = iou_rows[di]
                taken = used.setdefault(key, set())
                best_gt, best_iou = -1, -1.0
                for gi in range(len(ious)):
                    if gi in taken:
                        continue
                    if float(ious[gi]) > best_iou:
                        best_gt, best_iou = gi, float(ious[gi])
                if best_gt >= 0 and best_iou >= thr:
                    taken.add(best_gt)
                    flags[di] = True
            per_class_threshold[(cls, thr)] = interpolated_ap(flags, num_gt)

    per_class = {
        cls: float(np.mean([per_class_threshold[(cls, t)] for t in thresholds]))
        for cls in classes
    }
    per_threshold = {
        t: float(np.mean([per_class_threshold[(cls, t)] for cls in classes])) if classes else 0.0
        for t in thresholds
    }
    ap = float(np.mean(list(per_class.values()))) if per_class else 0.0

    def at(thr):
        if thr in per_threshold:
            return per_threshold[thr]
        return 0.0

    report = ApReport(
        ap=ap,
        ap50=at(0.5),
        ap75=at(0.75),
        per_class=per_class,
        per_threshold=per_threshold,
        num_gts=sum(len(v) for v in gt_index.values()),
        num_dets=len(ranked),
    )

    if with_area_breakdown:
        for name, (lo, hi) in AREA_RANGES.items():
            sub_gt = {
                "annotations": [
                    ann
                    for ann in gt_data["annotations"]
                    if lo <= _ann_area(ann, iou_kind) < hi
                ]
            }
            sub_dets = [d for d in ranked if lo <= _det_area(d, iou_kind) < hi]
            if sub_gt["annotations"]:
                sub = evaluate_ap(
                    sub_dets, sub_gt, iou_kind, thresholds, score_key, max_dets, False
                )
                report.ap_by_area[name] = sub.ap
            else:
                report.ap_by_area[name] = float("nan")
    return report


def _ann_area(ann: dict, iou_kind: str) -> float:
    if iou_kind == "mask" and "segmentation" in ann:
        return float(rle_area(ann["segmentation"]))
    b = ann["bbox"]
    return float(b[2]) * float(b[3])
