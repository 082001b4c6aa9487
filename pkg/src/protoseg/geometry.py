"""Boxes, anchor grids, and the box regression codec.

Boxes are [x1, y1, x2, y2] in pixels unless a function says otherwise.
Anchors live in center form [cx, cy, w, h] and are generated in a fixed
enumeration order: feature level outer, then grid row-major, then scale,
then aspect ratio.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import DimensionError
from .numerics import as_f64

DEFAULT_STRIDES = (8, 16, 32, 64, 128)
DEFAULT_BASE_SIZES = (24.0, 48.0, 96.0, 192.0, 384.0)
DEFAULT_ASPECT_RATIOS = (1.0, 0.5, 2.0)
DEFAULT_SCALES = (1.0,)
DEFAULT_VARIANCES = (0.1, 0.2)

# Guard for exp() in decode: beyond this the width/height is astronomically
# larger than any image and almost certainly a corrupt regressor.
MAX_DECODE_EXP_ARG = 50.0


@dataclass(frozen=True)
class AnchorConfig:
    """Geometry recipe for one detector head family.

    scale_multiplier rescales every base size uniformly (1 by default;
    some training setups grow all anchors by 4/3).
    """

    input_size: int
    strides: tuple = DEFAULT_STRIDES
    base_sizes: tuple = DEFAULT_BASE_SIZES
    aspect_ratios: tuple = DEFAULT_ASPECT_RATIOS
    scales: tuple = DEFAULT_SCALES
    variances: tuple = DEFAULT_VARIANCES
    scale_multiplier: float = 1.0

    def __post_init__(self):
        if self.input_size <= 0:
            raise ValueError(f"input_size must be positive, got {self.input_size}")
        if len(self.strides) != len(self.base_sizes):
            raise DimensionError(
                f"strides and base_sizes disagree: {len(self.strides)} vs {len(self.base_sizes)}"
            )
        if min(self.strides) <= 0 or min(self.base_sizes) <= 0:
            raise ValueError("strides and base_sizes must be positive")
        if not self.aspect_ratios or min(self.aspect_ratios) <= 0:
            raise ValueError(f"aspect_ratios must be positive, got {self.aspect_ratios}")
        if not self.scales or min(self.scales) <= 0:
            raise ValueError(f"scales must be positive, got {self.scales}")
        if self.scale_multiplier <= 0:
            raise ValueError(f"scale_multiplier must be positive, got {self.scale_multiplier}")
        if len(self.variances) != 2 or any(v <= 0 for v in self.variances):
            raise ValueError(f"variances must be two positive floats, got {self.variances}")

    def grid_sizes(self):
        return [math.ceil(self.input_size / s) for s in self.strides]

    def num_anchors(self) -> int:
        per_cell = len(self.scales) * len(self.aspect_ratios)
        return sum(g * g * per_cell for g in self.grid_sizes())


@dataclass
class AnchorSet:
    """Anchors in center form plus the config that produced them."""

    config: AnchorConfig
    centers: np.ndarray = field(repr=False)  # [n, 4] cx, cy, w, h

    def __len__(self):
        return self.centers.shape[0]

    def as_corners(self) -> np.ndarray:
        return center_to_corner(self.centers)


def generate_anchors(config: AnchorConfig) -> AnchorSet:
    """Enumerate every anchor for the config, unclipped.

    Centers sit at cell centers ((i + 0.5) * stride). For aspect ratio r
    the width scales by sqrt(r) and the height by 1/sqrt(r) so area is
    invariant across ratios at a given scale.
    """
    rows = []
    for stride, base in zip(config.strides, config.base_sizes):
        g = math.ceil(config.input_size / stride)
        side = base * config.scale_multiplier
        for i in range(g):
            cy = (i + 0.5) * stride
            for j in range(g):
                cx = (j + 0.5) * stride
                for scale in config.scales:
                    for ratio in config.aspect_ratios:
                        sq = math.sqrt(ratio)
                        w = side * scale * sq
                        h = side * scale / sq
                        rows.append((cx, cy, w, h))
    centers = np.array(rows, dtype=np.float64).reshape(-1, 4)
    return AnchorSet(config=config, centers=centers)


def center_to_corner(boxes: np.ndarray) -> np.ndarray:
    boxes = as_f64(boxes)
    half_w = boxes[..., 2] / 2.0
    half_h = boxes[..., 3] / 2.0
    return np.stack(
        [
            boxes[..., 0] - half_w,
            boxes[..., 1] - half_h,
            boxes[..., 0] + half_w,
            boxes[..., 1] + half_h,
        ],
        axis=-1,
    )


def corner_to_center(boxes: np.ndarray) -> np.ndarray:
    boxes = as_f64(boxes)
    w = boxes[..., 2] - boxes[..., 0]
    h = boxes[..., 3] - boxes[..., 1]
    return np.stack(
        [
            boxes[..., 0] + w / 2.0,
            boxes[..., 1] + h / 2.0,
            w,
            h,
        ],
        axis=-1,
    )


def iou(box_a, box_b) -> float:
    """Intersection over union of two corner-form boxes."""
    box_a = as_f64(box_a)
    box_b = as_f64(box_b)
    ix1 = max(box_a[0], box_b[0])
    iy1 = max(box_a[1], box_b[1])
    ix2 = min(box_a[2], box_b[2])
    iy2 = min(box_a[3], box_b[3])
    iw = max(ix2 - ix1, 0.0)
    ih = max(iy2 - iy1, 0.0)
    inter = iw * ih
    area_a = max(box_a[2] - box_a[0], 0.0) * max(box_a[3] - box_a[1], 0.0)
    area_b = max(box_b[2] - box_b[0], 0.0) * max(box_b[3] - box_b[1], 0.0)
    union = area_a + area_b - inter
    if union <= 0.0:
        return 0.0
    return float(inter / union)


def pairwise_iou(boxes_a: np.ndarray, boxes_b: np.ndarray) -> np.ndarray:
    """IoU matrix [len(a), len(b)] for corner-form boxes."""
    boxes_a = as_f64(boxes_a).reshape(-1, 4)
    boxes_b = as_f64(boxes_b).reshape(-1, 4)
    ix1 = np.maximum(boxes_a[:, None, 0], boxes_b[None, :, 0])
    iy1 = np.maximum(boxes_a[:, None, 1], boxes_b[None, :, 1])
    ix2 = np.minimum(boxes_a[:, None, 2], boxes_b[None, :, 2])
    iy2 = np.minimum(boxes_a[:, None, 3], boxes_b[None, :, 3])
    inter = np.clip(ix2 - ix1, 0.0, None) * np.clip(iy2 - iy1, 0.0, None)
    area_a = np.clip(boxes_a[:, 2] - boxes_a[:, 0], 0.0, None) * np.clip(
        boxes_a[:, 3] - boxes_a[:, 1], 0.0, None
    )
    area_b = np.clip(boxes_b[:, 2] - boxes_b[:, 0], 0.0, None) * np.clip(
        boxes_b[:, 3] - boxes_b[:, 1], 0.0, None
    )
    union = area_a[:, None] + area_b[None, :] - inter
    out = np.zeros_like(inter)
    np.divide(inter, union, out=out, where=union > 0.0)
    return out


def decode_boxes(regressors: np.ndarray, anchors: AnchorSet, clamp: bool = True) -> np.ndarray:
    """Decode [n, 4] regressors against anchors into corner-form pixel boxes.

    cx = a_cx + tx * v_center * a_w        w = a_w * exp(tw * v_size)
    cy = a_cy + ty * v_center * a_h        h = a_h * exp(th * v_size)

    Decoded corners are clamped to [0, input_size] unless clamp=False.
    """
    regressors = as_f64(regressors).reshape(-1, 4)
    centers = anchors.centers
    if regressors.shape[0] != centers.shape[0]:
        raise DimensionError(
            f"regressors rows {regressors.shape[0]} != anchors {centers.shape[0]}"
        )
    v_center, v_size = anchors.config.variances
    exp_arg = regressors[:, 2:4] * v_size
    bad = np.abs(exp_arg) > MAX_DECODE_EXP_ARG
    if np.any(bad):
        idx = int(np.argwhere(bad)[0][0])
        raise ValueError(
            f"decode_boxes: regressor {idx} size term {exp_arg[bad][0]:.3f} "
            f"exceeds exp guard {MAX_DECODE_EXP_ARG}"
        )
    cx = centers[:, 0] + regressors[:, 0] * v_center * centers[:, 2]
    cy = centers[:, 1] + regressors[:, 1] * v_center * centers[:, 3]
    w = centers[:, 2] * np.exp(exp_arg[:, 0])
    h = centers[:, 3] * np.exp(exp_arg[:, 1])
    corners = center_to_corner(np.stack([cx, cy, w, h], axis=-1))
    if clamp:
        corners = np.clip(corners, 0.0, float(anchors.config.input_size))
    return corners


def encode_boxes(boxes: np.ndarray, anchors: AnchorSet) -> np.ndarray:
    """Inverse of decode_boxes for corner-form target boxes (no clamping)."""
    boxes = as_f64(boxes).reshape(-1, 4)
    centers = anchors.centers
    if boxes.shape[0] != centers.shape[0]:
        raise DimensionError(f"boxes rows {boxes.shape[0]} != anchors {centers.shape[0]}")
    v_center, v_size = anchors.config.variances
    cf = corner_to_center(boxes)
    if np.any(cf[:, 2] <= 0) or np.any(cf[:, 3] <= 0):
        raise ValueError("encode_boxes: degenerate target box with non-positive size")
    tx = (cf[:, 0] - centers[:, 0]) / (v_center * centers[:, 2])
    ty = (cf[:, 1] - centers[:, 1]) / (v_center * centers[:, 3])
    tw = np.log(cf[:, 2] / centers[:, 2]) / v_size
    th = np.log(cf[:, 3] / centers[:, 3]) / v_size
    return np.stack([tx, ty, tw, th], axis=-1)
