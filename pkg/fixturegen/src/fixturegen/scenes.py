"""Synthetic scene construction.

Instances are rasterized on the low-resolution mask grid (one quarter of
the image side) and block-upsampled 4x to image resolution, so the image
ground truth is exactly representable by the mask grid. Placement keeps
pairwise box IoU low enough that suppression never merges two true
instances, and every instance must survive the round trip
soft mask -> bilinear 4x upsample -> 0.5 threshold with IoU above 0.992,
which the generator verifies with its own interpolation code.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .rle import encode as rle_encode

SHAPES = ("rectangle", "ellipse", "triangle")
MASK_SCALE = 4  # image side = MASK_SCALE * mask-grid side
HI_LOGIT = 12.0  # prototype magnitude before the 0.99 coefficient
RECOVERY_MIN_IOU = 0.992
MAX_PAIR_BOX_IOU = 0.40
_PLACEMENT_TRIES = 400


@dataclass
class Instance:
    class_id: int
    shape: str
    mask_grid: np.ndarray  # [s, s] bool, mask-grid resolution
    mask_image: np.ndarray  # [S, S] bool, block-upsampled
    bbox_xywh: tuple  # tight image-resolution bounds


@dataclass
class SyntheticScene:
    image_id: str
    size: int
    num_classes: int
    instances: list = field(default_factory=list)


def block_upsample(mask: np.ndarray, factor: int) -> np.ndarray:
    return np.repeat(np.repeat(mask, factor, axis=0), factor, axis=1)


def bilinear_halfpixel(src: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Reference half-pixel-center bilinear, scalar math on purpose."""
    in_h, in_w = src.shape
    out = np.empty((out_h, out_w), dtype=np.float64)
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
            top = src[y0, x0] * (1 - fx) + src[y0, x1] * fx
            bot = src[y1, x0] * (1 - fx) + src[y1, x1] * fx
            out[oy, ox] = top * (1 - fy) + bot * fy
    return out


def recovered_mask(mask_grid: np.ndarray, size: int) -> np.ndarray:
    """Simulate the consumer's reconstruction of a noise-free instance."""
    logit = np.where(mask_grid, HI_LOGIT, -HI_LOGIT) * 0.99
    soft = 1.0 / (1.0 + np.exp(-logit))
    return bilinear_halfpixel(soft, size, size) > 0.5


def _mask_iou(a: np.ndarray, b: np.ndarray) -> float:
    union = np.count_nonzero(a | b)
    return np.count_nonzero(a & b) / union if union else 0.0


def _tight_bbox_xywh(mask: np.ndarray) -> tuple:
    ys, xs = np.nonzero(mask)
    x0, x1 = int(xs.min()), int(xs.max()) + 1
    y0, y1 = int(ys.min()), int(ys.max()) + 1
    return (float(x0), float(y0), float(x1 - x0), float(y1 - y0))


def _bbox_iou_xywh(a: tuple, b: tuple) -> float:
    ax1, ay1, ax2, ay2 = a[0], a[1], a[0] + a[2], a[1] + a[3]
    bx1, by1, bx2, by2 = b[0], b[1], b[0] + b[2], b[1] + b[3]
    iw = min(ax2, bx2) - max(ax1, bx1)
    ih = min(ay2, by2) - max(ay1, by1)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (a[2] * a[3] + b[2] * b[3] - inter)


def _draw_shape(rng: np.random.Generator, s: int, shape: str, center=None) -> np.ndarray:
    """One shape on the [s, s] grid; set cells chosen by cell-center tests."""
    grid = np.zeros((s, s), dtype=bool)
    if center is None:
        cy = rng.uniform(s * 0.2, s * 0.8)
        cx = rng.uniform(s * 0.2, s * 0.8)
    else:
        cy, cx = center
    ys, xs = np.mgrid[0:s, 0:s]
    py = ys + 0.5
    px = xs + 0.5
    if shape == "rectangle":
        half_h = rng.uniform(3.2, s * 0.22)
        half_w = rng.uniform(3.2, s * 0.22)
        grid = (np.abs(py - cy) <= half_h) & (np.abs(px - cx) <= half_w)
    elif shape == "ellipse":
        ry = rng.uniform(3.6, s * 0.24)
        rx = rng.uniform(3.6, s * 0.24)
        grid = ((py - cy) / ry) ** 2 + ((px - cx) / rx) ** 2 <= 1.0
    else:  # triangle
        radius = rng.uniform(5.0, s * 0.26)
        angles = rng.uniform(0, 2 * math.pi) + np.array([0.0, 2.094395, 4.18879])
        vx = cx + radius * np.cos(angles)
        vy = cy + radius * np.sin(angles)
        inside = np.ones((s, s), dtype=bool)
        sign = None
        for i in range(3):
            x0, y0 = vx[i], vy[i]
            x1, y1 = vx[(i + 1) % 3], vy[(i + 1) % 3]
            cross = (x1 - x0) * (py - y0) - (y1 - y0) * (px - x0)
            if sign is None:
                # Orientation from the third vertex.
                x2, y2 = vx[(i + 2) % 3], vy[(i + 2) % 3]
                sign = 1.0 if (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0) >= 0 else -1.0
            inside &= (cross * sign) >= 0
        grid = inside
    return grid


def generate_scene(
    rng: np.random.Generator,
    image_id: str,
    size: int,
    n_instances: int,
    num_classes: int,
    overlap_prob: float = 0.0,
) -> SyntheticScene:
    """Place n_instances shapes; deterministic for a given rng state.

    With probability overlap_prob a new instance is required to overlap
    some earlier instance's mask by at least one grid cell (box IoU still
    capped so suppression keeps all instances apart).
    """
    if size % (2 * MASK_SCALE) != 0:
        raise ValueError(f"size must be divisible by {2 * MASK_SCALE}, got {size}")
    scene = SyntheticScene(image_id=image_id, size=size, num_classes=num_classes)
    s = size // MASK_SCALE
    for _ in range(n_instances):
        want_overlap = bool(scene.instances) and rng.random() < overlap_prob
        placed = False
        for _attempt in range(_PLACEMENT_TRIES):
            shape = SHAPES[int(rng.integers(0, len(SHAPES)))]
            center = None
            if want_overlap:
                other = scene.instances[int(rng.integers(0, len(scene.instances)))]
                oy, ox = np.nonzero(other.mask_grid)
                base_y = float(oy.mean())
                base_x = float(ox.mean())
                center = (
                    base_y + rng.uniform(-s * 0.2, s * 0.2),
                    base_x + rng.uniform(-s * 0.2, s * 0.2),
                )
            grid = _draw_shape(rng, s, shape, center)
            if not grid.any() or grid.sum() < 30:
                continue
            # Keep a one-cell clear border so boxes stay inside the image.
            if grid[0].any() or grid[-1].any() or grid[:, 0].any() or grid[:, -1].any():
                continue
            image_mask = block_upsample(grid, MASK_SCALE)
            bbox = _tight_bbox_xywh(image_mask)
            if any(
                _bbox_iou_xywh(bbox, inst.bbox_xywh) > MAX_PAIR_BOX_IOU
                for inst in scene.instances
            ):
                continue
            if want_overlap and not any(
                (grid & inst.mask_grid).any() for inst in scene.instances
            ):
                continue
            if _mask_iou(recovered_mask(grid, size), image_mask) <= RECOVERY_MIN_IOU:
                continue
            scene.instances.append(
                Instance(
                    class_id=int(rng.integers(1, num_classes + 1)),
                    shape=shape,
                    mask_grid=grid,
                    mask_image=image_mask,
                    bbox_xywh=bbox,
                )
            )
            placed = True
            break
        if not placed:
            raise RuntimeError(
                f"could not place instance {len(scene.instances)} after {_PLACEMENT_TRIES} tries"
            )
    return scene


def scene_gt(scene: SyntheticScene, first_ann_id: int = 1) -> dict:
    """Single-scene gt in the shared COCO-shaped layout."""
    annotations = []
    for idx, inst in enumerate(scene.instances):
        annotations.append(
            {
                "id": first_ann_id + idx,
                "image_id": scene.image_id,
                "category_id": inst.class_id,
                "bbox": list(inst.bbox_xywh),
                "area": int(inst.mask_image.sum()),
                "segmentation": rle_encode(inst.mask_image),
            }
        )
    return {
        "images": [{"id": scene.image_id, "width": scene.size, "height": scene.size}],
        "annotations": annotations,
        "categories": [
            {"id": j, "name": f"class_{j}"} for j in range(1, scene.num_classes + 1)
        ],
    }


SCENE_COLORS = (
    (200, 70, 60),
    (70, 170, 90),
    (230, 200, 60),
    (70, 110, 200),
    (180, 90, 200),
    (90, 200, 200),
    (220, 140, 70),
    (150, 150, 150),
)


def render_scene_image(scene: SyntheticScene) -> np.ndarray:
    """Flat-color rendering of the instance masks, later instances on top."""
    img = np.full((scene.size, scene.size, 3), 30, dtype=np.uint8)
    for inst in scene.instances:
        color = SCENE_COLORS[(inst.class_id - 1) % len(SCENE_COLORS)]
        img[inst.mask_image] = color
    return img
