"""End-to-end post-processing: dump files in, detection records out.

An image dump directory holds four tensor files plus a manifest:

    proto.ytns   [h, w, k]   prototype stack
    coeff.ytns   [n, k]      mask coefficients (pre- or post-tanh)
    conf.ytns    [n, c+1]    class logits, column 0 = background
    loc.ytns     [n, 4]      box regressors
    manifest.json            image_id, input_size, k, c, tanh_applied,
                             relu_applied (optional), anchors {...}

The manifest's anchor section is authoritative for geometry; a config
file cannot override it for a dump (it supplies NMS, rescoring, and
crop settings only).
"""

from dataclasses import dataclass
import json
import os

import numpy as np

from .config import PipelineConfig, anchor_config_from_dict
from .detections import DetectionSet
from .errors import FormatError
from .geometry import AnchorSet, decode_boxes, generate_anchors
from .maskops import (
    CoefficientMatrix,
    PrototypeStack,
    assemble_masks,
    binarize,
    crop_mask,
    resize_bilinear,
    rle_decode,
    rle_encode,
)
from .nms import merge_and_rank, run_nms
from .numerics import activate, argsort_desc
from .rescore import ConstantOne, OracleGtIou, rescore_detections
from .tensorfile import read_tensor

MANIFEST_NAME = "manifest.json"
TENSOR_NAMES = ("proto.ytns", "coeff.ytns", "conf.ytns", "loc.ytns")


@dataclass
class ImageDump:
    image_id: str
    input_size: int
    num_classes: int
    tanh_applied: bool
    prototypes: PrototypeStack
    coefficients: np.ndarray  # [n, k] raw, tanh handling deferred
    confidences: np.ndarray  # [n, c+1] logits
    regressors: np.ndarray  # [n, 4]
    anchors: AnchorSet


def load_image_dump(directory) -> ImageDump:
    manifest_path = os.path.join(directory, MANIFEST_NAME)
    try:
        with open(manifest_path, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
    except OSError as exc:
        raise FormatError(f"cannot read manifest {manifest_path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"manifest {manifest_path} is not valid JSON: {exc}") from exc

    required = {"image_id", "input_size", "k", "c", "tanh_applied", "anchors"}
    missing = required - set(manifest)
    if missing:
        raise FormatError(f"manifest {manifest_path} lacks key {sorted(missing)[0]!r}")

    input_size = int(manifest["input_size"])
    k = int(manifest["k"])
    c = int(manifest["c"])
    anchor_cfg = anchor_config_from_dict(
        {**manifest["anchors"], "input_size": input_size}, "manifest anchors"
    )
    anchors = generate_anchors(anchor_cfg)
    n = len(anchors)

    proto = read_tensor(os.path.join(directory, "proto.ytns"))
    coeff = read_tensor(os.path.join(directory, "coeff.ytns"))
    conf = read_tensor(os.path.join(directory, "conf.ytns"))
    loc = read_tensor(os.path.join(directory, "loc.ytns"))

    if proto.ndim != 3 or proto.shape[2] != k:
        raise FormatError(f"proto.ytns shape {proto.shape} disagrees with manifest k={k}")
    if coeff.shape != (n, k):
        raise FormatError(f"coeff.ytns shape {coeff.shape} != ({n}, {k}) from anchors")
    if conf.shape != (n, c + 1):
        raise FormatError(f"conf.ytns shape {conf.shape} != ({n}, {c + 1})")
    if loc.shape != (n, 4):
        raise FormatError(f"loc.ytns shape {loc.shape} != ({n}, 4)")
    if bool(manifest["tanh_applied"]) and np.max(np.abs(coeff), initial=0.0) > 1.0 + 1e-9:
        raise FormatError(
            f"coeff.ytns claims tanh_applied but magnitude reaches {np.max(np.abs(coeff)):.6f}"
        )

    try:
        prototypes = PrototypeStack.from_array(
            proto, require_nonnegative=bool(manifest.get("relu_applied", False))
        )
    except ValueError as exc:
        raise FormatError(f"proto.ytns: {exc}") from exc

    return ImageDump(
        image_id=str(manifest["image_id"]),
        input_size=input_size,
        num_classes=c,
        tanh_applied=bool(manifest["tanh_applied"]),
        prototypes=prototypes,
        coefficients=np.asarray(coeff, dtype=np.float64),
        confidences=np.asarray(conf, dtype=np.float64),
        regressors=np.asarray(loc, dtype=np.float64),
        anchors=anchors,
    )


def gt_masks_for_image(gt_data: dict, image_id: str):
    """Decode this image's gt masks and classes from a gt json dict."""
    masks, classes = [], []
    for ann in gt_data.get("annotations", []):
        if str(ann["image_id"]) != str(image_id):
            continue
        masks.append(rle_decode(ann["segmentation"]))
        classes.append(int(ann["category_id"]))
    return masks, classes


def run_postprocess(dump: ImageDump, config: PipelineConfig, gt_data=None) -> list:
    """Full post-processing chain for one image; returns detection records.

    softmax -> per-class threshold + top-n -> decode -> NMS -> merge ->
    tanh (if needed) -> assemble -> crop -> resize -> rescore ->
    binarize -> run-length encode.
    """
    nms_cfg = config.nms
    probs = activate(dump.confidences, "softmax_lastdim")  # [n, c+1]
    boxes = decode_boxes(dump.regressors, dump.anchors)  # clamped corner form

    kept_rows, kept_scores, kept_classes = [], [], []
    for cls in range(1, dump.num_classes + 1):
        scores = probs[:, cls]
        candidates = np.nonzero(scores > nms_cfg.score_threshold)[0]
        if candidates.size == 0:
            continue
        order = argsort_desc(scores[candidates])[: nms_cfg.top_n_per_class]
        candidates = candidates[order]
        keep = run_nms(boxes[candidates], scores[candidates], nms_cfg.method, nms_cfg.iou_threshold)
        chosen = candidates[keep]
        kept_rows.extend(int(r) for r in chosen)
        kept_scores.extend(float(s) for s in scores[chosen])
        kept_classes.extend(cls for _ in chosen)

    if not kept_rows:
        return []

    rows = np.array(kept_rows, dtype=np.int64)
    scores = np.array(kept_scores, dtype=np.float64)
    classes = np.array(kept_classes, dtype=np.int64)
    order = merge_and_rank(scores, classes, rows, nms_cfg.max_detections)
    rows, scores, classes = rows[order], scores[order], classes[order]

    coeffs = dump.coefficients[rows]
    if not dump.tanh_applied:
        coeffs = activate(coeffs, "tanh")
    coeff_matrix = CoefficientMatrix.from_array(coeffs)
    soft = assemble_masks(dump.prototypes, coeff_matrix).data  # [m, h, w]

    size = dump.input_size
    image_masks = np.empty((len(rows), size, size), dtype=np.float64)
    for i in range(len(rows)):
        cropped = crop_mask(soft[i], boxes[rows[i]], size, config.crop_pad_px)
        image_masks[i] = resize_bilinear(cropped, size, size)

    dets = DetectionSet(
        image_id=dump.image_id,
        boxes=boxes[rows],
        classes=classes,
        scores=scores,
        final_scores=scores.copy(),
        masks=image_masks,
    )

    if config.rescore == "oracle":
        if gt_data is None:
            raise FormatError("rescore mode 'oracle' needs ground-truth data")
        gt_masks, gt_classes = gt_masks_for_image(gt_data, dump.image_id)
        predictor = OracleGtIou(gt_masks, gt_classes) if gt_masks else ConstantOne()
        dets, _ = rescore_detections(dets, predictor)

    records = []
    for i in range(len(dets)):
        binary = binarize(dets.masks[i])
        x1, y1, x2, y2 = (float(v) for v in dets.boxes[i])
        records.append(
            {
                "image_id": dets.image_id,
                "category": int(dets.classes[i]),
                "score": float(dets.scores[i]),
                "final_score": float(dets.final_scores[i]),
                "bbox": [x1, y1, x2 - x1, y2 - y1],
                "mask": rle_encode(binary),
            }
        )
    return records


def write_detection_dump(path, records) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def read_detection_dump(path) -> list:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{line_no}: bad JSON line: {exc}") from exc
            for key in ("image_id", "category", "score", "final_score", "bbox", "mask"):
                if key not in record:
                    raise FormatError(f"{path}:{line_no}: record lacks {key!r}")
            if not 0.0 <= record["score"] <= 1.0 or not 0.0 <= record["final_score"] <= 1.0:
                raise FormatError(f"{path}:{line_no}: scores out of [0, 1]")
            bbox = record["bbox"]
            if not isinstance(bbox, list) or len(bbox) != 4:
                raise FormatError(f"{path}:{line_no}: bbox must be [x, y, w, h]")
            mask = record["mask"]
            if not isinstance(mask, dict) or "size" not in mask or "counts" not in mask:
                raise FormatError(f"{path}:{line_no}: mask must carry size and counts")
            records.append(record)
    return records


def load_gt(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise FormatError(f"cannot read gt file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"gt file {path} is not valid JSON: {exc}") from exc
    for key in ("images", "annotations", "categories"):
        if key not in data:
            raise FormatError(f"gt file {path} lacks {key!r} list")
    return data


def process_dump_dirs(dump_dirs, config: PipelineConfig, gt_data=None) -> list:
    """Run the pipeline over several dump directories, concatenating records."""
    records = []
    for directory in dump_dirs:
        dump = load_image_dump(directory)
        records.extend(run_postprocess(dump, config, gt_data))
    return records
