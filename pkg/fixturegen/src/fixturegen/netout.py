"""Pseudo detector outputs for a synthetic scene.

The construction inverts the consumer's post-processing chain exactly:

* prototype slot i holds instance i's grid mask as signed logits
  (+12 inside, -12 outside) plus optional Gaussian noise,
* coefficient rows are one-hot with value 0.99 (tanh already applied),
* the anchor best matching each gt box gets class logit +12, every other
  anchor gets background logit +12,
* regressors are the exact encoding of the gt box against that anchor.

With zero noise the pipeline must therefore reproduce each gt mask up to
the known corner rounding of the 4x upsample.
"""

import json
import os

import numpy as np

from .anchors import anchor_manifest_section, best_anchor_rows, build_anchors, encode_gt
from .scenes import HI_LOGIT, MASK_SCALE, SyntheticScene, bilinear_halfpixel
from . import tensorio

CONF_LOGIT = 12.0
COEFF_VALUE = 0.99


def instance_recovery_iou(scene: SyntheticScene, proto: np.ndarray, slot: int) -> float:
    """IoU a pipeline-equivalent reconstruction of one instance achieves.

    Mirrors the consumer chain for a one-hot coefficient row: sigmoid of
    the scaled prototype slot, crop to the gt box (pad 1) at grid
    resolution, bilinear upsample, threshold at 0.5.
    """
    inst = scene.instances[slot]
    size = scene.size
    logit = COEFF_VALUE * proto[:, :, slot]
    soft = 1.0 / (1.0 + np.exp(-logit))
    x, y, w, h = inst.bbox_xywh
    gx1 = x / MASK_SCALE - 1.0
    gx2 = (x + w) / MASK_SCALE + 1.0
    gy1 = y / MASK_SCALE - 1.0
    gy2 = (y + h) / MASK_SCALE + 1.0
    s = soft.shape[0]
    cols = np.arange(s, dtype=np.float64)
    keep_x = (cols >= gx1) & (cols < gx2)
    keep_y = (cols >= gy1) & (cols < gy2)
    cropped = soft * (keep_y[:, None] & keep_x[None, :])
    recovered = bilinear_halfpixel(cropped, size, size) > 0.5
    union = np.count_nonzero(recovered | inst.mask_image)
    if union == 0:
        return 0.0
    return float(np.count_nonzero(recovered & inst.mask_image) / union)


def export_pseudo_outputs(
    scene: SyntheticScene,
    k: int,
    noise_level: float,
    rng: np.random.Generator,
    out_dir,
) -> None:
    """Write proto/coeff/conf/loc tensors plus the manifest to out_dir."""
    n_inst = len(scene.instances)
    if k < n_inst:
        raise ValueError(f"k={k} prototype slots cannot hold {n_inst} instances")
    size = scene.size
    s = size // MASK_SCALE
    anchors = build_anchors(size)
    n = anchors.shape[0]
    c = scene.num_classes

    proto = np.empty((s, s, k), dtype=np.float64)
    for slot in range(k):
        if slot < n_inst:
            base = np.where(scene.instances[slot].mask_grid, HI_LOGIT, -HI_LOGIT)
        else:
            base = np.full((s, s), -HI_LOGIT)
        proto[:, :, slot] = base
    if noise_level > 0:
        proto += noise_level * rng.normal(size=proto.shape)

    coeff = np.zeros((n, k), dtype=np.float64)
    conf = np.zeros((n, c + 1), dtype=np.float64)
    conf[:, 0] = CONF_LOGIT
    loc = np.zeros((n, 4), dtype=np.float64)

    gt_corners = np.array(
        [
            [b[0], b[1], b[0] + b[2], b[1] + b[3]]
            for b in (inst.bbox_xywh for inst in scene.instances)
        ],
        dtype=np.float64,
    ).reshape(-1, 4)
    rows = best_anchor_rows(gt_corners, anchors)
    for i, row in enumerate(rows):
        inst = scene.instances[i]
        coeff[row, i] = COEFF_VALUE
        conf[row, :] = 0.0
        conf[row, inst.class_id] = CONF_LOGIT
        loc[row, :] = encode_gt(gt_corners[i], anchors[row])

    os.makedirs(out_dir, exist_ok=True)
    tensorio.write(os.path.join(out_dir, "proto.ytns"), proto)
    tensorio.write(os.path.join(out_dir, "coeff.ytns"), coeff)
    tensorio.write(os.path.join(out_dir, "conf.ytns"), conf)
    tensorio.write(os.path.join(out_dir, "loc.ytns"), loc)
    manifest = {
        "image_id": scene.image_id,
        "input_size": size,
        "k": k,
        "c": c,
        "tanh_applied": True,
        "relu_applied": False,
        "anchors": anchor_manifest_section(),
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
