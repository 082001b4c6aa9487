"""Training losses: hard-negative-mined classification, box smooth-L1,
crop-and-normalize mask BCE with analytic gradients, and the auxiliary
per-pixel semantic loss.

Class conventions: column 0 of an [n, c+1] logit matrix is background,
columns 1..c are object categories, matching gt class labels in 1..c.

Only the mask loss carries gradients. Its forward pass shares the exact
assembly math (one matmul, then sigmoid), so the returned dL/dC and dL/dP
are the true derivatives of the reported scalar.
"""

from dataclasses import dataclass
import warnings

import numpy as np

from .errors import DimensionError
from .numerics import activate, as_f64, matmul

NEGATIVE = -1
IGNORED = -2


@dataclass(frozen=True)
class LossWeights:
    w_cls: float = 1.0
    w_box: float = 1.5
    w_mask: float = 6.125
    w_sem: float = 1.0

    def __post_init__(self):
        if min(self.w_cls, self.w_box, self.w_mask, self.w_sem) <= 0:
            raise ValueError("loss weights must be positive")


@dataclass
class MatchResult:
    """Per-anchor assignment: gt index if positive, else NEGATIVE / IGNORED."""

    assignment: np.ndarray  # [n] int64

    @property
    def positive_mask(self) -> np.ndarray:
        return self.assignment >= 0

    @property
    def negative_mask(self) -> np.ndarray:
        return self.assignment == NEGATIVE

    @property
    def num_positive(self) -> int:
        return int(np.count_nonzero(self.positive_mask))


def match_anchors(anchors, gt_boxes, pos_thresh: float = 0.5, neg_thresh: float = 0.4) -> MatchResult:
    """Assign each anchor to a gt, to background, or to neither.

    An anchor is positive when its best gt IoU exceeds pos_thresh
    (assigned to the argmax gt), negative below neg_thresh, ignored in
    between. Afterwards every gt's single best anchor is forced positive
    so no gt goes unmatched.
    """
    from .geometry import pairwise_iou

    corners = anchors.as_corners() if hasattr(anchors, "as_corners") else as_f64(anchors)
    corners = corners.reshape(-1, 4)
    gt_boxes = as_f64(gt_boxes).reshape(-1, 4)
    n = corners.shape[0]
    assignment = np.full(n, NEGATIVE, dtype=np.int64)
    if gt_boxes.shape[0] == 0:
        return MatchResult(assignment)
    overlaps = pairwise_iou(corners, gt_boxes)  # [n, g]
    best_iou = overlaps.max(axis=1)
    best_gt = overlaps.argmax(axis=1)
    assignment[(best_iou >= neg_thresh) & (best_iou <= pos_thresh)] = IGNORED
    pos = best_iou > pos_thresh
    assignment[pos] = best_gt[pos]
    for gi in range(gt_boxes.shape[0]):
        assignment[int(overlaps[:, gi].argmax())] = gi
    return MatchResult(assignment)


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))


def classification_loss(
    logits,
    matches: MatchResult,
    gt_classes,
    neg_pos_ratio: int = 3,
    weights: LossWeights = LossWeights(),
):
    """Softmax cross entropy with hard negative mining.

    Positives contribute CE against their gt class. Negatives are ranked
    by CE against background and the top neg_pos_ratio * num_pos hardest
    are kept (top neg_pos_ratio when there are no positives at all). The
    loss is the mean over the selected anchors, times w_cls.

    Returns (scalar, selected negative anchor indices).
    """
    logits = as_f64(logits)
    gt_classes = np.asarray(gt_classes, dtype=np.int64).reshape(-1)
    if logits.ndim != 2:
        raise DimensionError(f"logits must be [n, c+1], got shape {logits.shape}")
    if logits.shape[0] != matches.assignment.shape[0]:
        raise DimensionError(
            f"logits rows {logits.shape[0]} != anchors {matches.assignment.shape[0]}"
        )
    log_probs = _log_softmax(logits)
    pos_idx = np.nonzero(matches.positive_mask)[0]
    neg_idx = np.nonzero(matches.negative_mask)[0]
    num_pos = len(pos_idx)

    pos_losses = np.zeros(0, dtype=np.float64)
    if num_pos:
        labels = gt_classes[matches.assignment[pos_idx]]
        if np.any(labels < 1) or np.any(labels >= logits.shape[1]):
            raise ValueError("gt class labels must lie in 1..c")
        pos_losses = -log_probs[pos_idx, labels]

    neg_losses = -log_probs[neg_idx, 0]
    want = neg_pos_ratio * num_pos if num_pos else neg_pos_ratio
    take = min(want, len(neg_idx))
    # Stable hardest-first selection so ties resolve by anchor index.
    hardest = neg_idx[np.argsort(-neg_losses, kind="stable")[:take]]
    selected_neg_losses = -log_probs[hardest, 0]

    total = float(np.sum(pos_losses) + np.sum(selected_neg_losses))
    count = num_pos + len(hardest)
    loss = weights.w_cls * total / count if count else 0.0
    return loss, hardest


def smooth_l1(x: np.ndarray) -> np.ndarray:
    """0.5 x^2 below |x| = 1, |x| - 0.5 beyond."""
    ax = np.abs(as_f64(x))
    return np.where(ax < 1.0, 0.5 * ax * ax, ax - 0.5)


def box_loss(pred_regressors, encoded_gt, matches: MatchResult, weights: LossWeights = LossWeights()) -> float:
    """Smooth-L1 over positive anchors' coords, / num_pos, * w_box."""
    pred = as_f64(pred_regressors).reshape(-1, 4)
    target = as_f64(encoded_gt).reshape(-1, 4)
    if pred.shape != target.shape:
        raise DimensionError(f"regressor shapes disagree: {pred.shape} vs {target.shape}")
    pos = matches.positive_mask
    num_pos = matches.num_positive
    if num_pos == 0:
        return 0.0
    per_coord = smooth_l1(pred[pos] - target[pos])
    return float(weights.w_box * per_coord.sum() / num_pos)


def _softplus(x: np.ndarray) -> np.ndarray:
    # log(1 + e^x) without overflow on either tail.
    return np.log1p(np.exp(-np.abs(x))) + np.maximum(x, 0.0)


def _inside_box_indicator(h: int, w: int, box: np.ndarray) -> np.ndarray:
    cols = np.arange(w, dtype=np.float64)
    rows = np.arange(h, dtype=np.float64)
    keep_x = (cols >= box[0]) & (cols < box[2])
    keep_y = (rows >= box[1]) & (rows < box[3])
    return (keep_y[:, None] & keep_x[None, :]).astype(np.float64)


def mask_loss(prototypes, coefficients_pos, gt_masks, gt_boxes, weights: LossWeights = LossWeights()):
    """Per-positive BCE inside the gt box, area-normalized, with gradients.

    prototypes [h, w, k]; coefficients_pos [p, k]; gt_masks [p, h, w]
    binary at the same resolution; gt_boxes [p, 4] corner form in
    mask-resolution coordinates. Per instance the sigmoid mask is compared
    to gt with pixel-wise BCE, restricted to pixels inside the gt box and
    divided by that pixel count, then the per-instance terms are averaged
    and scaled by w_mask.

    Returns (loss, dL/dC [p, k], dL/dP [h, w, k]). Instances whose box
    covers no pixels are skipped with a warning and do not enter the
    average.
    """
    p_stack = as_f64(prototypes.data if hasattr(prototypes, "data") else prototypes)
    coeffs = as_f64(coefficients_pos.data if hasattr(coefficients_pos, "data") else coefficients_pos)
    gt_masks = as_f64(gt_masks)
    gt_boxes = as_f64(gt_boxes).reshape(-1, 4)
    if p_stack.ndim != 3 or coeffs.ndim != 2:
        raise DimensionError(
            f"mask_loss expects P [h, w, k] and C [p, k], got {p_stack.shape} and {coeffs.shape}"
        )
    h, w, k = p_stack.shape
    num_inst = coeffs.shape[0]
    if p_stack.shape[2] != coeffs.shape[1]:
        raise DimensionError(f"prototype count {k} != coefficient count {coeffs.shape[1]}")
    if gt_masks.shape != (num_inst, h, w) or gt_boxes.shape[0] != num_inst:
        raise DimensionError(
            f"gt shapes {gt_masks.shape}/{gt_boxes.shape} disagree with {num_inst} instances at {h}x{w}"
        )

    p_flat = p_stack.reshape(h * w, k)
    logits = matmul(p_flat, coeffs)  # [hw, p]

    indicators = np.empty((num_inst, h * w), dtype=np.float64)
    areas = np.empty(num_inst, dtype=np.float64)
    active = []
    for i in range(num_inst):
        ind = _inside_box_indicator(h, w, gt_boxes[i]).ravel()
        area = ind.sum()
        indicators[i] = ind
        areas[i] = area
        if area > 0:
            active.append(i)
        else:
            warnings.warn(f"mask_loss: instance {i} gt box covers no pixels, skipped")
    if not active:
        return 0.0, np.zeros_like(coeffs), np.zeros_like(p_stack)
    num_pos = len(active)

    total = 0.0
    grad_logits = np.zeros((h * w, num_inst), dtype=np.float64)
    for i in active:
        x = logits[:, i]
        z = gt_masks[i].ravel()
        bce = _softplus(x) - z * x
        total += float((bce * indicators[i]).sum() / areas[i])
        m = activate(x, "sigmoid")
        grad_logits[:, i] = (m - z) * indicators[i] / areas[i]

    scale = weights.w_mask / num_pos
    loss = scale * total
    # Chain rule through logits = P_flat @ C^T.
    grad_logits *= scale
    d_coeffs = matmul(grad_logits.T, p_flat.T)  # [p, hw] x [k, hw]^T -> [p, k]
    d_protos = matmul(grad_logits, coeffs.T).reshape(h, w, k)  # [hw, p] x [k, p]^T
    return loss, d_coeffs, d_protos


def build_semantic_targets(gt_masks, gt_classes, c: int, out_h: int, out_w: int) -> np.ndarray:
    """Multi-hot [c, out_h, out_w] targets, max-pool downsampled.

    Channel j lights a pixel iff any instance of class j covers any input
    pixel of the corresponding block, so overlapping classes can both be 1.
    """
    gt_masks = np.asarray(gt_masks, dtype=bool)
    gt_classes = np.asarray(gt_classes, dtype=np.int64).reshape(-1)
    out = np.zeros((c, out_h, out_w), dtype=np.float64)
    if gt_masks.size == 0:
        return out
    if gt_masks.ndim != 3 or gt_masks.shape[0] != gt_classes.shape[0]:
        raise DimensionError(
            f"gt_masks {gt_masks.shape} disagree with {gt_classes.shape[0]} classes"
        )
    if np.any(gt_classes < 1) or np.any(gt_classes > c):
        raise ValueError("gt class labels must lie in 1..c")
    in_h, in_w = gt_masks.shape[1:]
    y_starts = (np.arange(out_h) * in_h) // out_h
    x_starts = (np.arange(out_w) * in_w) // out_w
    for mask, cls in zip(gt_masks, gt_classes):
        pooled = np.maximum.reduceat(mask.astype(np.float64), y_starts, axis=0)
        pooled = np.maximum.reduceat(pooled, x_starts, axis=1)
        np.maximum(out[cls - 1], pooled, out=out[cls - 1])
    return out


def semantic_loss(pred_logits, targets, weights: LossWeights = LossWeights()) -> float:
    """Mean per-pixel per-channel sigmoid BCE, * w_sem."""
    pred_logits = as_f64(pred_logits)
    targets = as_f64(targets)
    if pred_logits.shape != targets.shape:
        raise DimensionError(
            f"semantic shapes disagree: {pred_logits.shape} vs {targets.shape}"
        )
    bce = _softplus(pred_logits) - targets * pred_logits
    return float(weights.w_sem * bce.mean())
