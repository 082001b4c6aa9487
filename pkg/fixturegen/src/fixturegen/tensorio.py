"""Writer (and checking reader) for the binary tensor format.

Format, little-endian throughout: magic "YTNS", version byte 1, dtype
byte (1 float32, 2 float64, 3 uint8), ndim byte, ndim uint32 dims,
row-major payload. Kept independent of the consumer's codec on purpose.
"""

import struct

import numpy as np

_MAGIC = b"YTNS"
_VERSION = 1
_CODES = {"float32": 1, "float64": 2, "uint8": 3}
_NP_FOR_CODE = {1: "<f4", 2: "<f8", 3: "u1"}


def write(path, array: np.ndarray) -> None:
    array = np.asarray(array)
    name = array.dtype.name
    if name not in _CODES:
        raise ValueError(f"dtype {name} not in format (float32/float64/uint8)")
    code = _CODES[name]
    header = _MAGIC + bytes([_VERSION, code, array.ndim])
    header += struct.pack(f"<{array.ndim}I", *array.shape)
    body = np.ascontiguousarray(array).astype(_NP_FOR_CODE[code]).tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(body)


def read(path) -> np.ndarray:
    """Self-check reader so generator tests do not depend on the consumer."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != _MAGIC or blob[4] != _VERSION:
        raise ValueError(f"{path}: bad magic/version")
    code, ndim = blob[5], blob[6]
    dims = struct.unpack(f"<{ndim}I", blob[7 : 7 + 4 * ndim])
    out = np.frombuffer(blob[7 + 4 * ndim :], dtype=_NP_FOR_CODE[code])
    return out.reshape(dims).copy()
