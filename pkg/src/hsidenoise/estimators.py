"""Scikit-learn style wrappers around the functional pipeline.

Both estimators take the cube itself as ``X`` (shape (rows, cols,
bands)).  They are transductive: the statistics learned by ``fit`` (the
sparse-noise mask in particular) are element-wise properties of the
fitted cube, so ``transform`` accepts only a cube of the same shape and
is normally called on the fitted cube itself (or via ``fit_transform``).
``get_params``/``set_params`` come from ``BaseEstimator``, so the
classes compose with sklearn model-selection tooling.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .cube import validate_cube
from .denoisers import DenoiserSpec
from .noise import estimate_noise
from .pipeline import (
    PipelineConfig,
    clean_pixel_svd,
    auto_subspace_dim,
    denoise,
    resolve_min_clean,
    select_clean_pixels,
    whiten,
)


def check_cube(X) -> np.ndarray:
    """Validate estimator input: a finite 3-D (rows, cols, bands) array."""
    return validate_cube(np.asarray(X), name="X")


class MixedNoiseEstimator(BaseEstimator):
    """Estimate per-band Gaussian noise stds and sparse-noise locations.

    Attributes after ``fit``: ``sigma_`` (per-band noise std), ``mask_``
    (uint8 cube, 0 = sparse-corrupted element), ``band_reports_`` and
    ``warnings_`` (diagnostics).
    """

    def __init__(self, em_seed: int = 0, threads: int = 1):
        self.em_seed = em_seed
        self.threads = threads

    def fit(self, X, y=None):
        X = check_cube(X)
        est = estimate_noise(X, em_seed=self.em_seed, threads=self.threads)
        self.estimate_ = est
        self.sigma_ = est.sigma
        self.mask_ = est.mask
        self.band_reports_ = est.bands
        self.warnings_ = est.warnings
        return self


class MixedNoiseDenoiser(BaseEstimator, TransformerMixin):
    """Full subspace mixed-noise removal as a transformer.

    ``fit`` estimates noise statistics and the whitened spectral
    subspace from the cube; ``transform`` restores sparse-corrupted
    entries, denoises the subspace coefficient images, and returns the
    reconstructed cube.  Attributes after ``fit``: ``sigma_``,
    ``mask_``, ``basis_`` (B x P), ``subspace_dim_``; after
    ``transform``: ``report_``.
    """

    def __init__(
        self,
        subspace_dim: int | str = "auto",
        denoiser: str = "dct",
        denoiser_params: dict | None = None,
        em_seed: int = 0,
        min_clean_pixels: int | None = None,
        threads: int = 1,
    ):
        self.subspace_dim = subspace_dim
        self.denoiser = denoiser
        self.denoiser_params = denoiser_params
        self.em_seed = em_seed
        self.min_clean_pixels = min_clean_pixels
        self.threads = threads

    def _config(self) -> PipelineConfig:
        return PipelineConfig(
            subspace_dim=self.subspace_dim,
            denoiser=DenoiserSpec(self.denoiser, dict(self.denoiser_params or {})),
            em_seed=self.em_seed,
            min_clean_pixels=self.min_clean_pixels,
            threads=self.threads,
        )

    def fit(self, X, y=None):
        X = check_cube(X)
        cfg = self._config()
        est = estimate_noise(X, em_seed=cfg.em_seed, threads=cfg.threads)
        whitened = whiten(X, est.sigma)
        bands = X.shape[2]
        clean_idx, _ = select_clean_pixels(est.mask, resolve_min_clean(cfg, bands))
        u, s = clean_pixel_svd(whitened, clean_idx, mask=est.mask)
        if cfg.subspace_dim == "auto":
            p = auto_subspace_dim(s, clean_idx.size, bands)
        else:
            p = int(cfg.subspace_dim)
        self.noise_estimate_ = est
        self.sigma_ = est.sigma
        self.mask_ = est.mask
        self.basis_ = u[:, :p]
        self.subspace_dim_ = p
        self._shape = X.shape
        return self

    def transform(self, X):
        if not hasattr(self, "basis_"):
            raise NotFittedError("call fit before transform")
        X = check_cube(X)
        if X.shape != self._shape:
            raise ValueError(
                f"transform expects the fitted cube shape {self._shape}, "
                f"got {X.shape}"
            )
        cfg = self._config()
        if isinstance(cfg.subspace_dim, str):
            cfg = PipelineConfig(
                subspace_dim=self.subspace_dim_,
                denoiser=cfg.denoiser,
                em_seed=cfg.em_seed,
                min_clean_pixels=cfg.min_clean_pixels,
                threads=cfg.threads,
            )
        out, report = denoise(X, cfg, noise=self.noise_estimate_)
        self.report_ = report
        return out
