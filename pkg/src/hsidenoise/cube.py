"""Hyperspectral cube model and mode-3 algebra.

A cube is a plain float64 ndarray of shape (rows, cols, bands).  Pixel j
of the mode-3 unfolding is the spectrum at (i, k) with j = i + rows * k,
i.e. pixels are linearized column-major over (row, col).  Every module in
the package relies on this one linearization; it is equivalent to
Fortran-order flattening of the first two axes.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError


def validate_cube(cube: np.ndarray, name: str = "cube") -> np.ndarray:
    """Coerce to a float64 (rows, cols, bands) array and check invariants.

    Rejects non-3D input, empty axes, and non-finite values.  Returns the
    validated array (a float64 view or copy of the input).
    """
    arr = np.asarray(cube, dtype=np.float64)
    if arr.ndim != 3:
        raise ShapeError(f"{name} must be 3-D (rows, cols, bands), got shape {arr.shape}")
    if min(arr.shape) < 1:
        raise ShapeError(f"{name} has an empty axis: shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ShapeError(f"{name} contains NaN or infinite values")
    return arr


def unfold_mode3(cube: np.ndarray) -> np.ndarray:
    """Mode-3 unfolding: (rows, cols, bands) -> (bands, rows*cols).

    Column j holds the spectrum of pixel j = i + rows * k.
    """
    r, c, b = cube.shape
    return cube.reshape((r * c, b), order="F").T


def fold_mode3(mat: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Inverse of :func:`unfold_mode3`: (bands, rows*cols) -> cube."""
    mat = np.asarray(mat)
    if mat.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {mat.shape}")
    b, n = mat.shape
    if n != rows * cols:
        raise ShapeError(f"matrix has {n} columns, cannot fold into {rows}x{cols} pixels")
    return mat.T.reshape((rows, cols, b), order="F")


def mode3_product(cube: np.ndarray, mat: np.ndarray) -> np.ndarray:
    """Mode-3 product: apply `mat` (J x bands) across the spectral axis.

    Equivalent to fold(mat @ unfold(cube)); the result has J bands.
    """
    mat = np.asarray(mat, dtype=np.float64)
    r, c, b = cube.shape
    if mat.ndim != 2 or mat.shape[1] != b:
        raise ShapeError(
            f"matrix shape {mat.shape} does not match cube with {b} bands "
            f"(need J x {b})"
        )
    return fold_mode3(mat @ unfold_mode3(cube), r, c)


def frobenius_norm(cube: np.ndarray) -> float:
    """Square root of the sum of squared entries."""
    return float(np.linalg.norm(np.asarray(cube).ravel()))
