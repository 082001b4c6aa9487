"""Mask assembly, cropping, resizing, IoU, and the run-length codec.

Soft masks are float64 arrays in [0, 1]; binary masks are bool arrays.
Assembly combines a prototype stack [h, w, k] with per-instance
coefficients [n, k] through one matrix multiply followed by a sigmoid.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, FormatError
from .numerics import activate, as_f64, matmul

COEFF_TOL = 1e-9


@dataclass
class PrototypeStack:
    """Prototype tensor [h, w, k]."""

    data: np.ndarray

    @classmethod
    def from_array(cls, arr, require_nonnegative: bool = False) -> "PrototypeStack":
        arr = as_f64(arr)
        if arr.ndim != 3:
            raise DimensionError(f"prototypes must be [h, w, k], got shape {arr.shape}")
        if require_nonnegative and np.any(arr < 0.0):
            raise ValueError("prototypes violate the nonnegative contract")
        return cls(arr)

    @property
    def k(self) -> int:
        return self.data.shape[2]


@dataclass
class CoefficientMatrix:
    """Per-instance mixing coefficients [n, k], each in [-1, 1]."""

    data: np.ndarray

    @classmethod
    def from_array(cls, arr) -> "CoefficientMatrix":
        arr = as_f64(arr)
        if arr.ndim != 2:
            raise DimensionError(f"coefficients must be [n, k], got shape {arr.shape}")
        if np.any(np.abs(arr) > 1.0 + COEFF_TOL):
            worst = float(np.max(np.abs(arr)))
            raise ValueError(f"coefficient magnitude {worst} exceeds 1 (missing tanh?)")
        return cls(arr)

    @property
    def k(self) -> int:
        return self.data.shape[1]


@dataclass
class SoftMaskSet:
    """Assembled sigmoid masks [n, h, w], values in [0, 1]."""

    data: np.ndarray


def _raw(x) -> np.ndarray:
    return as_f64(x.data if hasattr(x, "data") else x)


def assemble_masks(prototypes, coefficients) -> SoftMaskSet:
    """sigmoid(P C^T) as one [hw, k] x [n, k]^T multiply, reshaped to [n, h, w]."""
    p = _raw(prototypes)
    c = _raw(coefficients)
    if p.ndim != 3 or c.ndim != 2:
        raise DimensionError(
            f"assemble_masks expects [h, w, k] and [n, k], got {p.shape} and {c.shape}"
        )
    if p.shape[2] != c.shape[1]:
        raise DimensionError(
            f"prototype count {p.shape[2]} != coefficient count {c.shape[1]}"
        )
    h, w, k = p.shape
    logits = matmul(p.reshape(h * w, k), c)  # [hw, n]
    masks = activate(logits, "sigmoid").T.reshape(c.shape[0], h, w)
    return SoftMaskSet(np.ascontiguousarray(masks))


def crop_mask(mask, box, image_size: int, pad_px: int = 1) -> np.ndarray:
    """Zero mask pixels outside a full-image box mapped to mask resolution.

    The box is divided by the image/mask ratio, expanded by pad_px on each
    side, and a pixel index p along either axis survives iff
    lo - pad <= p < hi + pad (float comparison, no rounding).
    """
    mask = as_f64(mask)
    if mask.ndim != 2:
        raise DimensionError(f"crop_mask expects [h, w], got shape {mask.shape}")
    box = as_f64(box).reshape(4)
    h, w = mask.shape
    x1 = box[0] * w / image_size - pad_px
    x2 = box[2] * w / image_size + pad_px
    y1 = box[1] * h / image_size - pad_px
    y2 = box[3] * h / image_size + pad_px
    cols = np.arange(w, dtype=np.float64)
    rows = np.arange(h, dtype=np.float64)
    keep_x = (cols >= x1) & (cols < x2)
    keep_y = (rows >= y1) & (rows < y2)
    return mask * (keep_y[:, None] & keep_x[None, :])


def resize_bilinear(mask, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize with half-pixel-center sampling.

    Output pixel o samples input coordinate (o + 0.5) * in/out - 0.5,
    clamped to the valid range, then lerps the four neighbors. Separable,
    so rows and columns are interpolated independently.
    """
    mask = as_f64(mask)
    if mask.ndim != 2:
        raise DimensionError(f"resize_bilinear expects [h, w], got shape {mask.shape}")
    if out_h <= 0 or out_w <= 0:
        raise ValueError(f"output size must be positive, got {out_h}x{out_w}")
    in_h, in_w = mask.shape

    def axis_coords(out_n, in_n):
        src = (np.arange(out_n, dtype=np.float64) + 0.5) * (in_n / out_n) - 0.5
        src = np.clip(src, 0.0, in_n - 1.0)
        lo = np.floor(src).astype(np.int64)
        hi = np.minimum(lo + 1, in_n - 1)
        frac = src - lo
        return lo, hi, frac

    y_lo, y_hi, fy = axis_coords(out_h, in_h)
    x_lo, x_hi, fx = axis_coords(out_w, in_w)
    top = mask[y_lo][:, x_lo] * (1.0 - fx) + mask[y_lo][:, x_hi] * fx
    bot = mask[y_hi][:, x_lo] * (1.0 - fx) + mask[y_hi][:, x_hi] * fx
    return top * (1.0 - fy)[:, None] + bot * fy[:, None]


def binarize(mask, threshold: float = 0.5) -> np.ndarray:
    """Strictly-greater-than threshold, so exact 0.5 maps to background."""
    return as_f64(mask) > threshold


def mask_iou(a, b) -> float:
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise DimensionError(f"mask_iou shapes disagree: {a.shape} vs {b.shape}")
    union = np.count_nonzero(a | b)
    if union == 0:
        return 0.0
    return float(np.count_nonzero(a & b) / union)


def rle_encode(mask) -> dict:
    """Column-major run-length encoding, runs alternating 0s then 1s.

    The scan goes down each column, columns left to right. The first
    count is always the leading zero-run, possibly of length 0.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise DimensionError(f"rle_encode expects [h, w], got shape {mask.shape}")
    h, w = mask.shape
    flat = mask.ravel(order="F")
    counts = []
    if flat.size == 0:
        counts = [0]
    else:
        changes = np.nonzero(flat[1:] != flat[:-1])[0] + 1
        bounds = np.concatenate(([0], changes, [flat.size]))
        runs = np.diff(bounds).tolist()
        if flat[0]:
            counts.append(0)
        counts.extend(int(r) for r in runs)
    return {"size": [int(h), int(w)], "counts": counts}


def rle_decode(rle: dict) -> np.ndarray:
    try:
        h, w = (int(v) for v in rle["size"])
        counts = [int(c) for c in rle["counts"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed rle object: {exc}") from exc
    if any(c < 0 for c in counts):
        raise FormatError("rle counts must be non-negative")
    if sum(counts) != h * w:
        raise FormatError(f"rle counts sum {sum(counts)} != {h}*{w}")
    flat = np.zeros(h * w, dtype=bool)
    pos = 0
    value = False
    for c in counts:
        if value:
            flat[pos : pos + c] = True
        pos += c
        value = not value
    return flat.reshape((h, w), order="F")


def rle_area(rle: dict) -> int:
    """Number of foreground pixels, straight from the counts."""
    counts = rle["counts"]
    return int(sum(counts[1::2]))
