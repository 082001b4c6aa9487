"""Wall-clock comparison of the two suppression methods.

The workload mirrors the batched form the matrix method is built for:
n boxes shared across c classes, each class with its own score vector,
so the matrix route runs one [c, m, m] reduction while the sequential
route loops class by class. Boxes are drawn in clusters so suppression
actually has work to do.
"""

from dataclasses import dataclass, asdict
import time

import numpy as np

from .nms import fast_nms_batched, traditional_nms

MAX_BENCH_BOXES = 10000


@dataclass
class BenchReport:
    n: int
    c: int
    repeats: int
    seed: int
    iou_threshold: float
    top_n: int
    fast_ms_median: float
    traditional_ms_median: float
    speedup: float  # traditional / fast
    agreement_jaccard: float  # mean per-class kept-set Jaccard
    classes_identical: float  # fraction of classes with equal kept sets

    def as_dict(self) -> dict:
        return asdict(self)


def clustered_boxes(rng: np.random.Generator, n: int, extent: float = 550.0):
    """Boxes bunched around a few cluster centers, corner form floats."""
    num_clusters = max(1, n // 20)
    centers = rng.uniform(0.0, extent, size=(num_clusters, 2))
    which = rng.integers(0, num_clusters, size=n)
    jitter = rng.normal(0.0, 18.0, size=(n, 2))
    cxy = centers[which] + jitter
    wh = rng.uniform(24.0, 120.0, size=(n, 2))
    x1 = cxy[:, 0] - wh[:, 0] / 2.0
    y1 = cxy[:, 1] - wh[:, 1] / 2.0
    return np.stack([x1, y1, x1 + wh[:, 0], y1 + wh[:, 1]], axis=-1)


def _kept_sets_traditional(boxes, scores_matrix, iou_threshold, top_n):
    kept = []
    for cls_scores in scores_matrix:
        order = np.argsort(-cls_scores, kind="stable")[:top_n]
        keep_local = traditional_nms(boxes[order], cls_scores[order], iou_threshold)
        kept.append(order[keep_local])
    return kept


def bench_nms(
    n: int,
    c: int,
    repeats: int = 5,
    seed: int = 0,
    iou_threshold: float = 0.5,
    top_n: int = 200,
) -> BenchReport:
    """Time both methods on one seeded workload and measure agreement."""
    if n <= 0 or n > MAX_BENCH_BOXES:
        raise ValueError(f"n must be in 1..{MAX_BENCH_BOXES}, got {n}")
    if c <= 0 or repeats <= 0:
        raise ValueError("c and repeats must be positive")
    rng = np.random.default_rng(seed)
    boxes = clustered_boxes(rng, n)
    scores_matrix = rng.uniform(0.05, 1.0, size=(c, n))

    fast_times, trad_times = [], []
    fast_kept = trad_kept = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        fast_kept = fast_nms_batched(boxes, scores_matrix, iou_threshold, top_n)
        fast_times.append((time.perf_counter() - t0) * 1000.0)

        t0 = time.perf_counter()
        trad_kept = _kept_sets_traditional(boxes, scores_matrix, iou_threshold, top_n)
        trad_times.append((time.perf_counter() - t0) * 1000.0)

    jaccards, identical = [], 0
    for f_idx, t_idx in zip(fast_kept, trad_kept):
        f_set, t_set = set(f_idx.tolist()), set(t_idx.tolist())
        union = f_set | t_set
        jaccards.append(len(f_set & t_set) / len(union) if union else 1.0)
        identical += f_set == t_set
    fast_median = float(np.median(fast_times))
    trad_median = float(np.median(trad_times))
    return BenchReport(
        n=n,
        c=c,
        repeats=repeats,
        seed=seed,
        iou_threshold=iou_threshold,
        top_n=top_n,
        fast_ms_median=fast_median,
        traditional_ms_median=trad_median,
        speedup=trad_median / fast_median if fast_median > 0 else float("inf"),
        agreement_jaccard=float(np.mean(jaccards)) if jaccards else 1.0,
        classes_identical=identical / len(fast_kept) if fast_kept else 1.0,
    )
