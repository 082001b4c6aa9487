"""Overlay rendering: blend detection masks onto an image, draw boxes
and score labels. Colors are a fixed palette indexed by category id so
reruns are pixel-identical.
"""

import numpy as np
from PIL import Image, ImageDraw

from .errors import DimensionError, FormatError
from .maskops import rle_decode

DEFAULT_ALPHA = 0.45
DEFAULT_SCORE_THRESHOLD = 0.3

PALETTE = (
    (230, 25, 75),
    (60, 180, 75),
    (255, 225, 25),
    (0, 130, 200),
    (245, 130, 48),
    (145, 30, 180),
    (70, 240, 240),
    (240, 50, 230),
    (210, 245, 60),
    (250, 190, 212),
    (0, 128, 128),
    (220, 190, 255),
)


def color_for_category(category: int) -> tuple:
    return PALETTE[int(category) % len(PALETTE)]


def load_image(path) -> np.ndarray:
    """PNG or PPM file to an RGB uint8 array [h, w, 3]."""
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("RGB"), dtype=np.uint8)
    except OSError as exc:
        raise FormatError(f"cannot read image {path}: {exc}") from exc


def save_png(path, image: np.ndarray) -> None:
    Image.fromarray(np.asarray(image, dtype=np.uint8), mode="RGB").save(path, format="PNG")


def visualize(
    image: np.ndarray,
    det_records: list,
    score_threshold: float = DEFAULT_SCORE_THRESHOLD,
    alpha: float = DEFAULT_ALPHA,
) -> np.ndarray:
    """Blend masks (alpha over the base image), outline boxes, label scores.

    Detections whose final_score is strictly below score_threshold are
    omitted. Higher-ranked detections are drawn last so they sit on top.
    Returns a new RGB uint8 array; zero surviving detections returns the
    input pixels unchanged.
    """
    image = np.asarray(image, dtype=np.uint8)
    if image.ndim != 3 or image.shape[2] != 3:
        raise DimensionError(f"expected RGB image [h, w, 3], got shape {image.shape}")
    h, w = image.shape[:2]
    chosen = [d for d in det_records if float(d["final_score"]) >= score_threshold]
    out = image.astype(np.float64)
    # Reverse rank order: the best detection is blended and drawn last.
    for det in reversed(chosen):
        mask = rle_decode(det["mask"])
        if mask.shape != (h, w):
            raise DimensionError(
                f"mask size {mask.shape} does not match image {(h, w)}"
            )
        color = np.array(color_for_category(det["category"]), dtype=np.float64)
        out[mask] = (1.0 - alpha) * out[mask] + alpha * color
    rendered = Image.fromarray(np.clip(np.round(out), 0, 255).astype(np.uint8), mode="RGB")
    draw = ImageDraw.Draw(rendered)
    for det in reversed(chosen):
        color = color_for_category(det["category"])
        x, y, bw, bh = (float(v) for v in det["bbox"])
        draw.rectangle([x, y, x + bw, y + bh], outline=color, width=1)
        label = f"{int(det['category'])}:{float(det['final_score']):.2f}"
        draw.text((x + 2.0, y + 2.0), label, fill=color)
    return np.asarray(rendered, dtype=np.uint8)
