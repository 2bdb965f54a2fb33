"""Bit-exact binary container for hyperspectral cubes (format "HYC1").

Layout, all little-endian:

    bytes 0-3   magic ASCII ``HYC1``
    byte  4     dtype flag: 0 = float32, 1 = float64
    bytes 5-7   reserved, must be zero
    bytes 8-19  three uint32: rows, cols, bands
    payload     rows*cols*bands scalars, band-sequential: band 0's full
                rows x cols plane column-major, then band 1, ...

Band-sequential column-major order is exactly Fortran-order flattening of
the (rows, cols, bands) array, matching the pixel linearization used by
the mode-3 unfolding.  Cubes are held as float64 in memory; writing with
``dtype="f64"`` (the default) round-trips bit-exactly.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import (
    BadMagicError,
    DimOverflowError,
    HeaderError,
    NonFiniteError,
    ShapeError,
    TruncatedError,
)

MAGIC = b"HYC1"
_HEADER = struct.Struct("<4sB3sIII")

# Guard against absurd headers before allocating: ~2.8e14 scalars.
_MAX_ELEMENTS = 1 << 48

_DTYPE_BY_FLAG = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_FLAG_BY_NAME = {"f32": 0, "f64": 1}


def write_container(cube: np.ndarray, path: str | Path, dtype: str = "f64") -> None:
    """Write a cube to `path` in HYC1 format.

    ``dtype`` is "f64" (bit-exact) or "f32" (half the size, lossy for
    float64 data).
    """
    if dtype not in _FLAG_BY_NAME:
        raise ValueError(f"dtype must be 'f32' or 'f64', got {dtype!r}")
    arr = np.asarray(cube, dtype=np.float64)
    if arr.ndim != 3:
        raise ShapeError(f"cube must be 3-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError("refusing to write non-finite values")
    flag = _FLAG_BY_NAME[dtype]
    r, c, b = arr.shape
    payload = arr.flatten(order="F").astype(_DTYPE_BY_FLAG[flag])
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, flag, b"\x00\x00\x00", r, c, b))
        fh.write(payload.tobytes())


def read_container(path: str | Path) -> np.ndarray:
    """Read an HYC1 file and return a float64 (rows, cols, bands) cube."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise TruncatedError(f"{path}: file shorter than the fixed header")
        magic, flag, reserved, r, c, b = _HEADER.unpack(head)
        if magic != MAGIC:
            raise BadMagicError(f"{path}: bad magic {magic!r}")
        if flag not in _DTYPE_BY_FLAG:
            raise HeaderError(f"{path}: unknown dtype flag {flag}")
        if reserved != b"\x00\x00\x00":
            raise HeaderError(f"{path}: reserved bytes not zero")
        if min(r, c, b) < 1:
            raise HeaderError(f"{path}: zero dimension in header ({r}, {c}, {b})")
        n = r * c * b
        if n > _MAX_ELEMENTS:
            raise DimOverflowError(f"{path}: header implies {n} scalars")
        dt = _DTYPE_BY_FLAG[flag]
        raw = fh.read(n * dt.itemsize)
        if len(raw) < n * dt.itemsize:
            raise TruncatedError(
                f"{path}: payload holds {len(raw) // dt.itemsize} of {n} scalars"
            )
    flat = np.frombuffer(raw, dtype=dt).astype(np.float64)
    if not np.all(np.isfinite(flat)):
        raise NonFiniteError(f"{path}: payload contains NaN or infinite values")
    return flat.reshape((r, c, b), order="F")
