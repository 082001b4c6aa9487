"""Brute-force reference computations frozen to JSON.

Everything here is deliberately scalar and slow: plain loops over plain
floats, no vectorized shortcuts, so the values are an independent check
on the consumer's array implementations.
"""

import json
import math
import os

import numpy as np


def _iou(a, b) -> float:
    ix = min(a[2], b[2]) - max(a[0], b[0])
    iy = min(a[3], b[3]) - max(a[1], b[1])
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    ua = (a[2] - a[0]) * (a[3] - a[1])
    ub = (b[2] - b[0]) * (b[3] - b[1])
    return inter / (ua + ub - inter)


def greedy_nms(boxes, scores, threshold) -> list:
    """Sequential suppression: kept boxes remove later ones above t."""
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    removed = set()
    kept = []
    for pos, i in enumerate(order):
        if i in removed:
            continue
        kept.append(i)
        for j in order[pos + 1 :]:
            if j not in removed and _iou(boxes[i], boxes[j]) > threshold:
                removed.add(j)
    return kept


def anyhigher_nms(boxes, scores, threshold) -> list:
    """Relaxed suppression: any higher-ranked box at or above t removes."""
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    kept = []
    for pos, i in enumerate(order):
        suppressed = False
        for q in range(pos):
            if _iou(boxes[order[q]], boxes[i]) >= threshold:
                suppressed = True
                break
        if not suppressed:
            kept.append(i)
    return kept


def make_nms_cases(rng: np.random.Generator, count: int = 40) -> list:
    cases = []
    # The hand-traceable chain: A suppresses B, the already-removed B
    # still suppresses C under the relaxed rule.
    chain_boxes = [[0.0, 0.0, 10.0, 10.0], [6.0, 0.0, 16.0, 10.0], [12.0, 0.0, 22.0, 10.0]]
    chain_scores = [0.9, 0.8, 0.7]
    cases.append(
        {
            "name": "chain",
            "boxes": chain_boxes,
            "scores": chain_scores,
            "threshold": 0.2,
            "traditional_kept": greedy_nms(chain_boxes, chain_scores, 0.2),
            "fast_kept": anyhigher_nms(chain_boxes, chain_scores, 0.2),
        }
    )
    for idx in range(count):
        n = int(rng.integers(2, 30))
        centers = rng.uniform(10.0, 90.0, size=(n, 2))
        sizes = rng.uniform(8.0, 40.0, size=(n, 2))
        boxes = [
            [
                float(centers[i, 0] - sizes[i, 0] / 2),
                float(centers[i, 1] - sizes[i, 1] / 2),
                float(centers[i, 0] + sizes[i, 0] / 2),
                float(centers[i, 1] + sizes[i, 1] / 2),
            ]
            for i in range(n)
        ]
        scores = [float(v) for v in rng.uniform(0.05, 1.0, size=n)]
        threshold = float(rng.choice([0.3, 0.5, 0.7]))
        cases.append(
            {
                "name": f"random_{idx}",
                "boxes": boxes,
                "scores": scores,
                "threshold": threshold,
                "traditional_kept": greedy_nms(boxes, scores, threshold),
                "fast_kept": anyhigher_nms(boxes, scores, threshold),
            }
        )
    return cases


def assembly_brute(prototypes, coefficients) -> list:
    """sigmoid(sum_t P[y][x][t] C[i][t]) with explicit loops."""
    h = len(prototypes)
    w = len(prototypes[0])
    k = len(prototypes[0][0])
    out = []
    for coeff in coefficients:
        mask = [[0.0] * w for _ in range(h)]
        for y in range(h):
            for x in range(w):
                acc = 0.0
                for t in range(k):
                    acc += prototypes[y][x][t] * coeff[t]
                mask[y][x] = 1.0 / (1.0 + math.exp(-acc))
        out.append(mask)
    return out


def make_assembly_cases(rng: np.random.Generator, count: int = 10) -> list:
    cases = [
        {
            "name": "two_by_two",
            "prototypes": [[[1.0, 0.0], [0.0, 1.0]], [[2.0, 0.0], [0.0, 2.0]]],
            "coefficients": [[1.0, -1.0]],
        }
    ]
    for idx in range(count):
        h = int(rng.integers(1, 7))
        w = int(rng.integers(1, 7))
        k = int(rng.integers(1, 5))
        n = int(rng.integers(1, 6))
        cases.append(
            {
                "name": f"random_{idx}",
                "prototypes": rng.normal(0, 2, size=(h, w, k)).tolist(),
                "coefficients": rng.uniform(-1, 1, size=(n, k)).tolist(),
            }
        )
    for case in cases:
        case["expected"] = assembly_brute(case["prototypes"], case["coefficients"])
    return cases


def ap_101(det_scores, det_ious, num_gt, threshold) -> float:
    """Single-image single-class AP with 101-point interpolation.

    det_ious[i] is detection i's IoU against the one-and-only gt it could
    match (greedy, first match wins).
    """
    order = sorted(range(len(det_scores)), key=lambda i: (-det_scores[i], i))
    gt_taken = [False] * num_gt
    points = []
    tp = fp = 0
    for i in order:
        best, best_iou = -1, -1.0
        for g in range(num_gt):
            if not gt_taken[g] and det_ious[i][g] > best_iou:
                best, best_iou = g, det_ious[i][g]
        if best >= 0 and best_iou >= threshold:
            gt_taken[best] = True
            tp += 1
        else:
            fp += 1
        points.append((tp / num_gt, tp / (tp + fp)))
    total = 0.0
    for step in range(101):
        r = step / 100.0
        best_p = 0.0
        for recall, precision in points:
            if recall >= r and precision > best_p:
                best_p = precision
        total += best_p
    return total / 101.0


def make_ap_case() -> dict:
    """One gt, two detections: high score low IoU, low score high IoU."""
    thresholds = [round(0.50 + 0.05 * i, 2) for i in range(10)]
    det_scores = [0.9, 0.8]
    det_ious = [[0.6], [0.95]]
    per_threshold = {f"{t:.2f}": ap_101(det_scores, det_ious, 1, t) for t in thresholds}
    values = list(per_threshold.values())
    return {
        "gt_box_xywh": [0.0, 0.0, 10.0, 10.0],
        "det_boxes_xywh": [[0.0, 0.0, 10.0, 6.0], [0.0, 0.0, 10.0, 9.5]],
        "det_scores": det_scores,
        "ious": [0.6, 0.95],
        "per_threshold": per_threshold,
        "ap": sum(values) / len(values),
        "ap50": per_threshold["0.50"],
        "ap75": per_threshold["0.75"],
    }


def mask_loss_value(prototypes, coefficients, gt_masks, gt_boxes, w_mask=6.125) -> float:
    """Contract restatement of the mask loss, scalar math only."""
    h = len(prototypes)
    w = len(prototypes[0])
    k = len(prototypes[0][0])
    total = 0.0
    p = len(coefficients)
    for i in range(p):
        x1, y1, x2, y2 = gt_boxes[i]
        area = 0
        acc = 0.0
        for y in range(h):
            if not (y >= y1 and y < y2):
                continue
            for x in range(w):
                if not (x >= x1 and x < x2):
                    continue
                area += 1
                logit = 0.0
                for t in range(k):
                    logit += prototypes[y][x][t] * coefficients[i][t]
                z = gt_masks[i][y][x]
                # log(1 + e^logit) - z*logit, overflow-safe
                softplus = math.log1p(math.exp(-abs(logit))) + max(logit, 0.0)
                acc += softplus - z * logit
        total += acc / area
    return w_mask * total / p


def make_gradient_case(rng: np.random.Generator) -> dict:
    h = w = 6
    k = 3
    p = 2
    prototypes = rng.normal(0, 1.5, size=(h, w, k)).tolist()
    coefficients = rng.uniform(-0.9, 0.9, size=(p, k)).tolist()
    gt_masks = (rng.random((p, h, w)) > 0.5).astype(float).tolist()
    gt_boxes = [[1.0, 0.5, 5.2, 4.8], [0.0, 2.0, 6.0, 6.0]]
    step = 1e-6
    loss = mask_loss_value(prototypes, coefficients, gt_masks, gt_boxes)

    fd_dc = [[0.0] * k for _ in range(p)]
    for i in range(p):
        for t in range(k):
            up = [row[:] for row in coefficients]
            down = [row[:] for row in coefficients]
            up[i][t] += step
            down[i][t] -= step
            fd_dc[i][t] = (
                mask_loss_value(prototypes, up, gt_masks, gt_boxes)
                - mask_loss_value(prototypes, down, gt_masks, gt_boxes)
            ) / (2 * step)

    fd_dp = [[[0.0] * k for _ in range(w)] for _ in range(h)]
    for y in range(h):
        for x in range(w):
            for t in range(k):
                up = [[cell[:] for cell in row] for row in prototypes]
                down = [[cell[:] for cell in row] for row in prototypes]
                up[y][x][t] += step
                down[y][x][t] -= step
                fd_dp[y][x][t] = (
                    mask_loss_value(up, coefficients, gt_masks, gt_boxes)
                    - mask_loss_value(down, coefficients, gt_masks, gt_boxes)
                ) / (2 * step)

    return {
        "prototypes": prototypes,
        "coefficients": coefficients,
        "gt_masks": gt_masks,
        "gt_boxes": gt_boxes,
        "step": step,
        "loss": loss,
        "fd_dcoeffs": fd_dc,
        "fd_dprotos": fd_dp,
    }


def bilinear_reference(src, out_h, out_w) -> list:
    in_h = len(src)
    in_w = len(src[0])
    out = [[0.0] * out_w for _ in range(out_h)]
    for oy in range(out_h):
        sy = min(max((oy + 0.5) * in_h / out_h - 0.5, 0.0), in_h - 1.0)
        y0 = int(math.floor(sy))
        y1 = min(y0 + 1, in_h - 1)
        fy = sy - y0
        for ox in range(out_w):
            sx = min(max((ox + 0.5) * in_w / out_w - 0.5, 0.0), in_w - 1.0)
            x0 = int(math.floor(sx))
            x1 = min(x0 + 1, in_w - 1)
            fx = sx - x0
            top = src[y0][x0] * (1 - fx) + src[y0][x1] * fx
            bot = src[y1][x0] * (1 - fx) + src[y1][x1] * fx
            out[oy][ox] = top * (1 - fy) + bot * fy
    return out


def make_bilinear_cases(rng: np.random.Generator) -> list:
    cases = [
        {
            "name": "two_by_two_to_four",
            "src": [[0.0, 1.0], [0.0, 1.0]],
            "out_h": 4,
            "out_w": 4,
        },
        {
            "name": "upscale_rect",
            "src": rng.random((3, 5)).tolist(),
            "out_h": 7,
            "out_w": 9,
        },
        {
            "name": "downscale",
            "src": rng.random((8, 8)).tolist(),
            "out_h": 3,
            "out_w": 5,
        },
    ]
    for case in cases:
        case["expected"] = bilinear_reference(case["src"], case["out_h"], case["out_w"])
    return cases


def write_oracles(out_dir, seed: int = 20240817) -> list:
    os.makedirs(out_dir, exist_ok=True)
    rng = np.random.default_rng(seed)
    files = {
        "nms_cases.json": make_nms_cases(rng),
        "assembly_cases.json": make_assembly_cases(rng),
        "ap_case.json": make_ap_case(),
        "gradient_case.json": make_gradient_case(rng),
        "bilinear_cases.json": make_bilinear_cases(rng),
    }
    written = []
    for name, payload in files.items():
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=1, sort_keys=True)
            fh.write("\n")
        written.append(path)
    return written
