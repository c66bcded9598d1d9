"""Minimal OVT tensor writer/reader.

The interchange format shared with the consumer side:
magic "OVTF", u32 version=1, u8 dtype (0=f32, 1=i32), u32 ndim,
ndim x u64 dims, then the row-major little-endian payload. Deliberately
reimplemented here so the export tool has no code dependency on the
consumer package — the bytes on disk are the contract.
"""

from __future__ import annotations

import struct

import numpy as np

from ovor_export.errors import ExportError

MAGIC = b"OVTF"
VERSION = 1
_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<i4")}


def write_ovt(path, array) -> None:
    arr = np.asarray(array)
    if np.issubdtype(arr.dtype, np.floating):
        code, arr = 0, arr.astype("<f4")
    elif np.issubdtype(arr.dtype, np.integer):
        code, arr = 1, arr.astype("<i4")
    else:
        raise ExportError(f"unsupported dtype {arr.dtype}")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<IBI", VERSION, code, arr.ndim))
        f.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        f.write(np.ascontiguousarray(arr).tobytes())


def read_ovt(path) -> np.ndarray:
    with open(path, "rb") as f:
        data = f.read()
    if data[:4] != MAGIC:
        raise ExportError(f"{path}: bad magic {data[:4]!r}")
    version, code, ndim = struct.unpack_from("<IBI", data, 4)
    if version != VERSION:
        raise ExportError(f"{path}: unsupported version {version}")
    if code not in _DTYPES:
        raise ExportError(f"{path}: unknown dtype code {code}")
    dims = struct.unpack_from(f"<{ndim}Q", data, 13)
    payload = data[13 + 8 * ndim :]
    arr = np.frombuffer(payload, dtype=_DTYPES[code])
    if arr.size != int(np.prod(dims, dtype=np.int64)):
        raise ExportError(f"{path}: truncated payload")
    return arr.reshape(dims)
