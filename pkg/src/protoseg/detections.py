"""Per-image detection container used across the pipeline stages.

Parallel arrays, one row per detection. Masks are attached after
assembly as soft (pre-threshold) maps at whatever resolution the stage
works in; earlier stages leave them as None.
"""

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import DimensionError
from .numerics import as_f64


@dataclass
class DetectionSet:
    image_id: str
    boxes: np.ndarray  # [n, 4] corner form, full-image pixels
    classes: np.ndarray  # [n] category ids in 1..c
    scores: np.ndarray  # [n] classification confidence
    final_scores: np.ndarray  # [n] post-rescoring ranking score
    masks: Optional[np.ndarray] = None  # [n, h, w] soft masks

    def __post_init__(self):
        self.boxes = as_f64(self.boxes).reshape(-1, 4)
        self.classes = np.asarray(self.classes, dtype=np.int64).reshape(-1)
        self.scores = as_f64(self.scores).reshape(-1)
        self.final_scores = as_f64(self.final_scores).reshape(-1)
        n = self.boxes.shape[0]
        if not (len(self.classes) == len(self.scores) == len(self.final_scores) == n):
            raise DimensionError(
                f"detection arrays disagree: boxes {n}, classes {len(self.classes)}, "
                f"scores {len(self.scores)}, final {len(self.final_scores)}"
            )
        if self.masks is not None:
            self.masks = as_f64(self.masks)
            if self.masks.ndim != 3 or self.masks.shape[0] != n:
                raise DimensionError(
                    f"masks shape {self.masks.shape} disagrees with {n} detections"
                )

    def __len__(self) -> int:
        return self.boxes.shape[0]

    def take(self, order) -> "DetectionSet":
        """Reorder or subset every parallel array by the given indices."""
        order = np.asarray(order, dtype=np.int64)
        return replace(
            self,
            boxes=self.boxes[order],
            classes=self.classes[order],
            scores=self.scores[order],
            final_scores=self.final_scores[order],
            masks=None if self.masks is None else self.masks[order],
        )

    @classmethod
    def empty(cls, image_id: str) -> "DetectionSet":
        return cls(
            image_id=image_id,
            boxes=np.zeros((0, 4)),
            classes=np.zeros(0, dtype=np.int64),
            scores=np.zeros(0),
            final_scores=np.zeros(0),
        )
