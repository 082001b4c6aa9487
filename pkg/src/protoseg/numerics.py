"""Dense numeric kernels shared by every other module.

Arrays are plain float64 numpy ndarrays. The kernels here are the only
reductions whose summation order matters for reproducibility, so matmul
accumulates slice by slice instead of delegating to BLAS: serial and
parallel builds then produce bit-identical results.
"""

import numpy as np

from .errors import DimensionError

ACTIVATIONS = ("sigmoid", "tanh", "relu", "softmax_lastdim")


def as_f64(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def _require_finite(x: np.ndarray, op: str) -> None:
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{op}: input contains non-finite values")


def matmul(a: np.ndarray, b_transposed: np.ndarray) -> np.ndarray:
    """Multiply a [m, k] by the transpose of b_transposed [n, k] -> [m, n].

    out[i, j] = sum_t a[i, t] * b_transposed[j, t], accumulated
    left-to-right over t so the reduction order is fixed.
    """
    a = as_f64(a)
    b_transposed = as_f64(b_transposed)
    if a.ndim != 2 or b_transposed.ndim != 2:
        raise DimensionError(
            f"matmul expects rank-2 operands, got {a.shape} and {b_transposed.shape}"
        )
    if a.shape[1] != b_transposed.shape[1]:
        raise DimensionError(
            f"matmul inner dimensions disagree: {a.shape} vs {b_transposed.shape}"
        )
    m, k = a.shape
    n = b_transposed.shape[0]
    out = np.zeros((m, n), dtype=np.float64)
    tmp = np.empty((m, n), dtype=np.float64)
    for t in range(k):
        np.multiply(a[:, t, None], b_transposed[None, :, t], out=tmp)
        out += tmp
    return out


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # Piecewise form avoids overflow in exp for large |x|.
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def activate(x: np.ndarray, kind: str) -> np.ndarray:
    """Apply an elementwise nonlinearity (or per-row softmax over the last dim)."""
    x = as_f64(x)
    _require_finite(x, f"activate[{kind}]")
    if kind == "sigmoid":
        return _sigmoid(x)
    if kind == "tanh":
        return np.tanh(x)
    if kind == "relu":
        return np.maximum(x, 0.0)
    if kind == "softmax_lastdim":
        if x.ndim < 1:
            raise DimensionError("softmax_lastdim needs rank >= 1")
        shifted = x - np.max(x, axis=-1, keepdims=True)
        ex = np.exp(shifted)
        return ex / np.sum(ex, axis=-1, keepdims=True)
    raise ValueError(f"unknown activation kind {kind!r}, expected one of {ACTIVATIONS}")


def argsort_desc(scores) -> np.ndarray:
    """Indices that sort scores descending; ties keep ascending original index."""
    scores = as_f64(scores)
    if scores.ndim != 1:
        raise DimensionError(f"argsort_desc expects a vector, got shape {scores.shape}")
    if np.any(np.isnan(scores)):
        raise ValueError("argsort_desc: NaN score")
    return np.argsort(-scores, kind="stable")
