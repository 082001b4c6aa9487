"""Column-major run-length codec for binary masks, zero-run first.

Scan order goes down each column, columns left to right; counts
alternate 0-run, 1-run, ... with a possibly empty leading 0-run.
"""

import numpy as np


def encode(mask: np.ndarray) -> dict:
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    counts = []
    run_value = False
    run_length = 0
    for x in range(w):
        for y in range(h):
            v = bool(mask[y, x])
            if v == run_value:
                run_length += 1
            else:
                counts.append(run_length)
                run_value = v
                run_length = 1
    counts.append(run_length)
    return {"size": [int(h), int(w)], "counts": [int(c) for c in counts]}


def decode(rle: dict) -> np.ndarray:
    h, w = rle["size"]
    flat = np.zeros(h * w, dtype=bool)
    pos = 0
    value = False
    for count in rle["counts"]:
        if value:
            flat[pos : pos + count] = True
        pos += count
        value = not value
    if pos != h * w:
        raise ValueError(f"counts sum {pos} != {h * w}")
    out = np.zeros((h, w), dtype=bool)
    for x in range(w):
        out[:, x] = flat[x * h : (x + 1) * h]
    return out
