"""OVT binary tensor interchange format.

Layout: magic b"OVTF", u32 version (=1), u8 dtype code (0 = float32,
1 = int32), u32 ndim, ndim x u64 dims, then the row-major little-endian
payload. Designed to be trivially writable from any language and to
round-trip bit-exactly.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ovor.errors import FormatError

MAGIC = b"OVTF"
VERSION = 1

_DTYPE_CODES = {0: np.dtype("<f4"), 1: np.dtype("<i4")}
_CODE_FOR_KIND = {"f": 0, "i": 1, "u": 1, "b": 1}


def write_ovt(path, array) -> None:
    """Write ``array`` to ``path``. Floats are stored as f32, ints as i32."""
    arr = np.asarray(array)
    code = _CODE_FOR_KIND.get(arr.dtype.kind)
    if code is None:
        raise FormatError(f"unsupported dtype {arr.dtype} for OVT")
    arr = np.ascontiguousarray(arr, dtype=_DTYPE_CODES[code])
    header = MAGIC + struct.pack("<IBI", VERSION, code, arr.ndim)
    header += struct.pack(f"<{arr.ndim}Q", *arr.shape)
    Path(path).write_bytes(header + arr.tobytes())


def read_ovt(path) -> np.ndarray:
    """Read an OVT file back as a numpy array (f32 or i32)."""
    data = Path(path).read_bytes()
    if len(data) < 13 or data[:4] != MAGIC:
        raise FormatError(f"{path}: not an OVT file (bad magic)")
    version, code, ndim = struct.unpack_from("<IBI", data, 4)
    if version != VERSION:
        raise FormatError(f"{path}: unsupported OVT version {version}")
    if code not in _DTYPE_CODES:
        raise FormatError(f"{path}: unknown dtype code {code}")
    offset = 13
    if len(data) < offset + 8 * ndim:
        raise FormatError(f"{path}: truncated header")
    shape = struct.unpack_from(f"<{ndim}Q", data, offset)
    offset += 8 * ndim
    dtype = _DTYPE_CODES[code]
    expected = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
    payload = data[offset:]
    if len(payload) != expected:
        raise FormatError(
            f"{path}: payload is {len(payload)} bytes, expected {expected}"
        )
    return np.frombuffer(payload, dtype=dtype).reshape(shape).copy()
