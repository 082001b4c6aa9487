"""Anchor grid and box codec, written from the shared contract.

Enumeration: level outer, grid row-major, scale, then aspect ratio.
Centers at ((j + 0.5) stride, (i + 0.5) stride); width base*scale*sqrt(r)
and height base*scale/sqrt(r); anchors are not clipped. Encoding divides
center deltas by 0.1 * anchor size and log size ratios by 0.2.
"""

import math

import numpy as np

STRIDES = (8, 16, 32, 64, 128)
BASE_SIZES = (24.0, 48.0, 96.0, 192.0, 384.0)
ASPECT_RATIOS = (1.0, 0.5, 2.0)
SCALES = (1.0,)
VARIANCES = (0.1, 0.2)


def anchor_manifest_section() -> dict:
    return {
        "strides": list(STRIDES),
        "base_sizes": list(BASE_SIZES),
        "aspect_ratios": list(ASPECT_RATIOS),
        "scales": list(SCALES),
        "variances": list(VARIANCES),
        "scale_multiplier": 1.0,
    }


def build_anchors(input_size: int) -> np.ndarray:
    """All anchors in center form [n, 4] (cx, cy, w, h)."""
    rows = []
    for stride, base in zip(STRIDES, BASE_SIZES):
        g = math.ceil(input_size / stride)
        for i in range(g):
            for j in range(g):
                cx = (j + 0.5) * stride
                cy = (i + 0.5) * stride
                for scale in SCALES:
                    for ratio in ASPECT_RATIOS:
                        rt = math.sqrt(ratio)
                        rows.append((cx, cy, base * scale * rt, base * scale / rt))
    return np.array(rows, dtype=np.float64)


def anchors_corner(anchors_center: np.ndarray) -> np.ndarray:
    cx, cy, w, h = (anchors_center[:, i] for i in range(4))
    return np.stack([cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2], axis=-1)


def box_iou_single(a, b) -> float:
    ix = min(a[2], b[2]) - max(a[0], b[0])
    iy = min(a[3], b[3]) - max(a[1], b[1])
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    area_a = (a[2] - a[0]) * (a[3] - a[1])
    area_b = (b[2] - b[0]) * (b[3] - b[1])
    return float(inter / (area_a + area_b - inter))


def best_anchor_rows(gt_corner_boxes: np.ndarray, anchors_center: np.ndarray) -> list:
    """Highest-IoU anchor per gt, greedily de-duplicated in gt order."""
    corners = anchors_corner(anchors_center)
    taken = set()
    rows = []
    for gt in gt_corner_boxes:
        ious = np.array([box_iou_single(gt, a) for a in corners])
        for idx in np.argsort(-ious, kind="stable"):
            if int(idx) not in taken:
                taken.add(int(idx))
                rows.append(int(idx))
                break
    return rows


def encode_gt(gt_corner: np.ndarray, anchor_center: np.ndarray) -> np.ndarray:
    """SSD-style regression target for one gt against one anchor."""
    gx = (gt_corner[0] + gt_corner[2]) / 2.0
    gy = (gt_corner[1] + gt_corner[3]) / 2.0
    gw = gt_corner[2] - gt_corner[0]
    gh = gt_corner[3] - gt_corner[1]
    acx, acy, aw, ah = anchor_center
    v_c, v_s = VARIANCES
    return np.array(
        [
            (gx - acx) / (v_c * aw),
            (gy - acy) / (v_c * ah),
            math.log(gw / aw) / v_s,
            math.log(gh / ah) / v_s,
        ],
        dtype=np.float64,
    )
