"""Binary tensor file codec.

Layout, all little-endian:

    bytes 0..3   magic "YTNS"
    byte  4      version, currently 1
    byte  5      dtype: 1 = float32, 2 = float64, 3 = uint8
    byte  6      ndim
    next ndim*4  dimension sizes, uint32 each
    rest         payload, row-major

The payload length must equal the product of the dims times the element
size; anything else is rejected, as are trailing bytes.
"""

import struct

import numpy as np

from .errors import FormatError

MAGIC = b"YTNS"
VERSION = 1

_DTYPE_CODES = {1: np.dtype("<f4"), 2: np.dtype("<f8"), 3: np.dtype("u1")}


def _code_for(arr: np.ndarray) -> int:
    if arr.dtype == np.float32:
        return 1
    if arr.dtype == np.float64:
        return 2
    if arr.dtype == np.uint8:
        return 3
    raise FormatError(f"unsupported tensor dtype {arr.dtype}, use f32/f64/u8")


def write_tensor(path, arr) -> None:
    arr = np.asarray(arr)
    if arr.dtype == bool:
        arr = arr.astype(np.uint8)
    elif arr.dtype not in (np.float32, np.float64, np.uint8):
        arr = arr.astype(np.float64)
    code = _code_for(arr)
    if arr.ndim > 255:
        raise FormatError("tensor rank exceeds format limit of 255")
    for d in arr.shape:
        if d > 0xFFFFFFFF:
            raise FormatError(f"dimension {d} exceeds uint32 range")
    header = MAGIC + bytes([VERSION, code, arr.ndim])
    header += struct.pack(f"<{arr.ndim}I", *arr.shape)
    payload = np.ascontiguousarray(arr).astype(_DTYPE_CODES[code], copy=False)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes(order="C"))


def read_tensor(path) -> np.ndarray:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 7:
        raise FormatError(f"{path}: truncated header ({len(blob)} bytes)")
    if blob[:4] != MAGIC:
        raise FormatError(f"{path}: bad magic {blob[:4]!r}, expected {MAGIC!r}")
    version, code, ndim = blob[4], blob[5], blob[6]
    if version != VERSION:
        raise FormatError(f"{path}: unknown version {version}, expected {VERSION}")
    if code not in _DTYPE_CODES:
        raise FormatError(f"{path}: unknown dtype code {code}")
    dims_end = 7 + 4 * ndim
    if len(blob) < dims_end:
        raise FormatError(f"{path}: truncated dimension list")
    dims = struct.unpack(f"<{ndim}I", blob[7:dims_end])
    dtype = _DTYPE_CODES[code]
    expected = int(np.prod(dims, dtype=np.int64)) * dtype.itemsize
    payload = blob[dims_end:]
    if len(payload) != expected:
        raise FormatError(
            f"{path}: payload length {len(payload)} != expected {expected} for dims {dims}"
        )
    arr = np.frombuffer(payload, dtype=dtype)
    return arr.reshape(dims).copy()
