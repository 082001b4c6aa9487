"""Duplicate suppression over class-wise detection candidates.

Two interchangeable methods:

* traditional: the sequential greedy scan. Keep the best remaining
  candidate, drop everything overlapping it by more than the threshold,
  repeat. Suppression cascades only from kept detections.
* fast: one IoU matrix per class. A candidate is dropped when any
  higher-scored candidate (kept or not) overlaps it at or above the
  threshold, so the whole thing collapses to an upper-triangular max.

Fast can only ever drop more than traditional drops, never less, so the
kept set of fast is always a subset of traditional's kept set.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .numerics import argsort_desc, as_f64
from .geometry import pairwise_iou

NMS_METHODS = ("fast", "traditional")


@dataclass(frozen=True)
class NmsConfig:
    method: str = "fast"
    iou_threshold: float = 0.5
    score_threshold: float = 0.05
    top_n_per_class: int = 200
    max_detections: int = 100

    def __post_init__(self):
        if self.method not in NMS_METHODS:
            raise ValueError(f"unknown nms method {self.method!r}, expected {NMS_METHODS}")
        if not 0.0 < self.iou_threshold < 1.0:
            raise ValueError(f"iou_threshold must be in (0, 1), got {self.iou_threshold}")
        if self.top_n_per_class <= 0 or self.max_detections <= 0:
            raise ValueError("top_n_per_class and max_detections must be positive")


def _check_inputs(boxes: np.ndarray, scores: np.ndarray):
    boxes = as_f64(boxes).reshape(-1, 4)
    scores = as_f64(scores).reshape(-1)
    if boxes.shape[0] != scores.shape[0]:
        raise DimensionError(
            f"boxes rows {boxes.shape[0]} != scores length {scores.shape[0]}"
        )
    return boxes, scores


def traditional_nms(boxes, scores, iou_threshold: float) -> np.ndarray:
    """Greedy sequential suppression; drops overlap strictly above threshold.

    Returns indices into the input arrays, best score first.
    """
    boxes, scores = _check_inputs(boxes, scores)
    order = argsort_desc(scores)
    kept = []
    alive = np.ones(len(order), dtype=bool)
    sorted_boxes = boxes[order]
    for pos in range(len(order)):
        if not alive[pos]:
            continue
        kept.append(order[pos])
        rest = np.arange(pos + 1, len(order))
        rest = rest[alive[rest]]
        if rest.size == 0:
            continue
        overlaps = pairwise_iou(sorted_boxes[pos], sorted_boxes[rest])[0]
        alive[rest[overlaps > iou_threshold]] = False
    return np.array(kept, dtype=np.int64)


def fast_nms(boxes, scores, iou_threshold: float) -> np.ndarray:
    """Matrix-form suppression; drops overlap at or above threshold.

    Sort by score, compute the pairwise IoU matrix, zero the diagonal and
    lower triangle, take the per-column max K. Column j survives iff
    K[j] < threshold: no higher-scored candidate overlaps it that much.
    Returns indices into the input arrays, best score first.
    """
    boxes, scores = _check_inputs(boxes, scores)
    if len(scores) == 0:
        return np.empty(0, dtype=np.int64)
    order = argsort_desc(scores)
    x = pairwise_iou(boxes[order], boxes[order])
    x = np.triu(x, k=1)
    k = x.max(axis=0)
    return order[k < iou_threshold]


def fast_nms_reference(boxes, scores, iou_threshold: float) -> np.ndarray:
    """Scalar restatement of fast_nms used for cross-checking.

    Walks candidates best-first and drops one iff some strictly
    higher-ranked candidate overlaps it at or above the threshold,
    whether or not that candidate itself survived.
    """
    boxes, scores = _check_inputs(boxes, scores)
    order = argsort_desc(scores)
    kept = []
    for pos in range(len(order)):
        removed = False
        for prev in range(pos):
            overlap = pairwise_iou(boxes[order[prev]], boxes[order[pos]])[0, 0]
            if overlap >= iou_threshold:
                removed = True
                break
        if not removed:
            kept.append(order[pos])
    return np.array(kept, dtype=np.int64)


def run_nms(boxes, scores, method: str, iou_threshold: float) -> np.ndarray:
    if method == "fast":
        return fast_nms(boxes, scores, iou_threshold)
    if method == "traditional":
        return traditional_nms(boxes, scores, iou_threshold)
    raise ValueError(f"unknown nms method {method!r}, expected {NMS_METHODS}")


def fast_nms_batched(boxes, scores_matrix, iou_threshold: float, top_n: int):
    """Run fast suppression for every class in one set of array ops.

    boxes: [n, 4] shared across classes. scores_matrix: [c, n]. Each class
    takes its own top_n by score, then all c IoU matrices are built and
    reduced together. Returns a list of c index arrays into boxes.
    """
    boxes = as_f64(boxes).reshape(-1, 4)
    scores_matrix = as_f64(scores_matrix)
    if scores_matrix.ndim != 2 or scores_matrix.shape[1] != boxes.shape[0]:
        raise DimensionError(
            f"scores_matrix {scores_matrix.shape} does not match boxes {boxes.shape}"
        )
    c, n = scores_matrix.shape
    m = min(top_n, n)
    # Stable descending sort per class, truncated to the class top_n.
    order = np.argsort(-scores_matrix, axis=1, kind="stable")[:, :m]
    gathered = boxes[order]  # [c, m, 4]
    ix1 = np.maximum(gathered[:, :, None, 0], gathered[:, None, :, 0])
    iy1 = np.maximum(gathered[:, :, None, 1], gathered[:, None, :, 1])
    ix2 = np.minimum(gathered[:, :, None, 2], gathered[:, None, :, 2])
    iy2 = np.minimum(gathered[:, :, None, 3], gathered[:, None, :, 3])
    inter = np.clip(ix2 - ix1, 0.0, None) * np.clip(iy2 - iy1, 0.0, None)
    areas = np.clip(gathered[:, :, 2] - gathered[:, :, 0], 0.0, None) * np.clip(
        gathered[:, :, 3] - gathered[:, :, 1], 0.0, None
    )
    union = areas[:, :, None] + areas[:, None, :] - inter
    x = np.zeros_like(inter)
    np.divide(inter, union, out=x, where=union > 0.0)
    x = np.triu(x, k=1)
    k = x.max(axis=1)  # [c, m] column max within each class
    keep = k < iou_threshold
    return [order[ci][keep[ci]] for ci in range(c)]


def merge_and_rank(scores, classes, rows, max_detections: int):
    """Merge per-class survivors into one ranked list.

    Sort by score descending with (class, source row) breaking exact
    ties, then truncate to max_detections. Returns the permutation
    applied to the inputs.
    """
    scores = as_f64(scores).reshape(-1)
    classes = np.asarray(classes, dtype=np.int64).reshape(-1)
    rows = np.asarray(rows, dtype=np.int64).reshape(-1)
    if not (len(scores) == len(classes) == len(rows)):
        raise DimensionError("merge_and_rank: ragged inputs")
    order = np.lexsort((rows, classes, -scores))
    return order[:max_detections]
