"""Single-band Gaussian denoisers pluggable into the pipeline.

A denoiser is any deterministic callable ``f(img, sigma) -> img`` taking
a 2-D float array and the noise std and returning an array of the same
shape.  The pipeline treats the denoiser as a black box, so stronger
external denoisers (e.g. a neural one) can be registered without
touching the pipeline.  The bundled baseline is overlapping-block DCT
hard thresholding: deterministic, dependency-free, and a reasonable
stand-in for learned priors on spatially smooth images.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import partial
from typing import Callable

import numpy as np
from scipy.fft import dctn, idctn

Denoiser = Callable[[np.ndarray, float], np.ndarray]

BLOCK = 8
STRIDE = 4
# Hard-threshold multiplier.  Above the universal threshold
# sqrt(2 ln 64) ~ 2.88 for 8x8 blocks: the extra margin keeps
# noise-only eigen-images near flat, which is what makes the pipeline
# insensitive to subspace-dimension overestimates.
THRESHOLD = 3.5


def identity_denoiser(img: np.ndarray, sigma: float) -> np.ndarray:
    """No-op denoiser (ablation baseline)."""
    return np.array(img, dtype=np.float64, copy=True)


def _block_starts(length: int, block: int, stride: int) -> np.ndarray:
    starts = list(range(0, length - block + 1, stride))
    if starts[-1] != length - block:
        starts.append(length - block)
    return np.asarray(starts)


def dct_denoiser(
    img: np.ndarray,
    sigma: float,
    block: int = BLOCK,
    stride: int = STRIDE,
    threshold: float = THRESHOLD,
) -> np.ndarray:
    """Overlapping block-DCT hard thresholding.

    Blocks of ``block x block`` at the given stride (plus a final block
    flush against each edge) are DCT-transformed; coefficients smaller in
    magnitude than ``threshold * sigma`` are zeroed, except the DC
    coefficient which always survives, so constant images are fixed
    points.  Overlapping reconstructions are averaged with uniform
    weights.  ``sigma = 0`` returns the input unchanged.  Images smaller
    than one block are zero-padded to a single block and cropped after.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {img.shape}")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0.0:
        return img.copy()
    r, c = img.shape
    rp, cp = max(r, block), max(c, block)
    if (rp, cp) != (r, c):
        padded = np.zeros((rp, cp))
        padded[:r, :c] = img
    else:
        padded = img

    si = _block_starts(rp, block, stride)
    sj = _block_starts(cp, block, stride)
    ii = (si[:, None, None, None] + np.arange(block)[None, None, :, None])
    jj = (sj[None, :, None, None] + np.arange(block)[None, None, None, :])
    ii = np.broadcast_to(ii, (si.size, sj.size, block, block))
    jj = np.broadcast_to(jj, (si.size, sj.size, block, block))
    blocks = padded[ii, jj].reshape(-1, block, block)

    coeffs = dctn(blocks, axes=(1, 2), norm="ortho")
    keep = np.abs(coeffs) >= threshold * sigma
    keep[:, 0, 0] = True
    recon = idctn(coeffs * keep, axes=(1, 2), norm="ortho")

    acc = np.zeros_like(padded)
    hits = np.zeros_like(padded)
    flat_i = ii.reshape(-1, block, block)
    flat_j = jj.reshape(-1, block, block)
    np.add.at(acc, (flat_i, flat_j), recon)
    np.add.at(hits, (flat_i, flat_j), 1.0)
    return (acc / hits)[:r, :c]


@dataclass
class DenoiserSpec:
    """Named denoiser plus parameter overrides; builds the callable."""

    name: str = "dct"
    params: dict[str, float] = field(default_factory=dict)

    def build(self) -> Denoiser:
        if self.name not in REGISTRY:
            raise ValueError(
                f"unknown denoiser {self.name!r}; available: {sorted(REGISTRY)}"
            )
        fn = REGISTRY[self.name]
        if self.params:
            fn = partial(fn, **self.params)
        return fn

    def to_dict(self) -> dict:
        return {"name": self.name, "params": dict(self.params)}


REGISTRY: dict[str, Denoiser] = {
    "identity": identity_denoiser,
    "dct": dct_denoiser,
}
