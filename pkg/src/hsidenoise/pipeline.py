"""Non-iterative mixed-noise removal pipeline.

Stages, in order: estimate noise statistics; whiten each band by its
noise std; pick pixels untouched by sparse noise; estimate the spectral
subspace from them by SVD; re-project every pixel onto the subspace by
masked least squares (restoring the sparse-corrupted entries); denoise
each subspace coefficient image with a pluggable single-band denoiser;
reconstruct; unwhiten.  Everything is deterministic given the config
seed, for any worker-thread count.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cube import fold_mode3, mode3_product, unfold_mode3, validate_cube
from .denoisers import DenoiserSpec
from .errors import (
    DegenerateInputError,
    InsufficientDataError,
    PipelineError,
    ShapeError,
)
from .jsonio import write_json
from .noise import NoiseEstimate, estimate_noise

# Tikhonov term for the masked normal equations (partial masks only).
PROJECTION_RIDGE = 1e-8
# Relative energy kept by the automatic subspace-dimension rule.
ENERGY_TAIL = 1e-4
# Deliberate overestimation margin added to the energy rank.
DIM_MARGIN = 5
# Fixed chunk size for the per-pixel solves: parallelism never changes
# which pixels are batched together, keeping output bit-identical.
_CHUNK = 2048


@dataclass
class PipelineConfig:
    """Knobs for :func:`denoise`.

    ``subspace_dim`` is an explicit dimension or "auto"; ``em_seed``
    seeds the mixture-fit restarts; ``min_clean_pixels`` defaults to
    50 * subspace_dim (50 * bands when auto).
    """

    subspace_dim: int | str = "auto"
    denoiser: DenoiserSpec = field(default_factory=DenoiserSpec)
    em_seed: int = 0
    min_clean_pixels: int | None = None
    threads: int = 1

    def __post_init__(self):
        if isinstance(self.subspace_dim, str):
            if self.subspace_dim != "auto":
                raise ValueError("subspace_dim must be a positive int or 'auto'")
        elif self.subspace_dim < 1:
            raise ValueError("subspace_dim must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


@dataclass
class RunReport:
    """Everything a run learned, for logs and reproducibility checks."""

    stages: list[tuple[str, float]] = field(default_factory=list)
    sigma_per_band: np.ndarray | None = None
    mask_zero_fraction: float = 0.0
    subspace_dim: int = 0
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "stages": [{"name": n, "seconds": s} for n, s in self.stages],
            "sigma_per_band": (
                self.sigma_per_band.tolist() if self.sigma_per_band is not None else []
            ),
            "mask_zero_fraction": self.mask_zero_fraction,
            "subspace_dim": self.subspace_dim,
            "warnings": list(self.warnings),
        }

    def save(self, path) -> None:
        write_json(path, self.to_dict())


def resolve_min_clean(cfg: PipelineConfig, bands: int) -> int:
    """Clean-pixel requirement: enough for a full-rank, stable Gram.

    Q > B guarantees the band Gram is full rank; 10 per subspace
    dimension adds averaging headroom.  Kept deliberately modest: asking
    for more forces the relaxation ladder onto partially corrupted
    pixels, which degrades the subspace far more than a smaller pure
    sample does.
    """
    if cfg.min_clean_pixels is not None:
        return cfg.min_clean_pixels
    if isinstance(cfg.subspace_dim, int):
        return max(bands + 1, 10 * cfg.subspace_dim)
    return bands + 1


def whiten(cube: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """Scale band b by 1/sigma[b] so Gaussian noise has unit variance."""
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.ndim != 1 or sigma.size != cube.shape[2]:
        raise ShapeError("sigma must have one entry per band")
    if np.any(sigma <= 0):
        raise ValueError("sigma must be strictly positive (floored upstream)")
    return cube / sigma[None, None, :]


def unwhiten(cube: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """Inverse of :func:`whiten`."""
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.ndim != 1 or sigma.size != cube.shape[2]:
        raise ShapeError("sigma must have one entry per band")
    return cube * sigma[None, None, :]


def select_clean_pixels(
    mask: np.ndarray, min_clean_pixels: int
) -> tuple[np.ndarray, list[str]]:
    """Indices of pixels whose mask column is all-ones.

    If fewer than ``min_clean_pixels`` qualify, relaxes to pixels with
    >= 95% clean bands, then to all pixels; each relaxation is recorded
    as a warning.  Pixel indices follow the mode-3 linearization.
    """
    m = unfold_mode3(np.asarray(mask))
    b = m.shape[0]
    counts = (m != 0).sum(axis=0)
    warnings: list[str] = []
    idx = np.flatnonzero(counts == b)
    if idx.size < min_clean_pixels:
        warnings.append(
            f"only {idx.size} fully clean pixels (< {min_clean_pixels}); "
            "relaxing to >= 95% clean bands"
        )
        idx = np.flatnonzero(counts >= int(np.ceil(0.95 * b)))
        if idx.size < min_clean_pixels:
            warnings.append(
                f"only {idx.size} pixels with >= 95% clean bands; using all pixels"
            )
            idx = np.arange(m.shape[1])
    return idx, warnings


def clean_pixel_svd(
    whitened: np.ndarray,
    clean_pixels: np.ndarray,
    mask: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Left singular vectors and singular values of the clean-pixel matrix.

    When ``mask`` is given and the selection had to include pixels with
    some masked (sparse-corrupted) bands, those entries are imputed with
    band-wise medians of the unmasked elements before the
    decomposition: a handful of whitened gross outliers would otherwise
    dominate the spectrum.  Fully clean selections are unaffected.

    The B x Q spectra matrix is tall and thin in pixels (Q can be 1e5,
    B <= a few hundred), so when Q > B we work on the B x B Gram matrix
    and take its eigendecomposition instead of a direct SVD.
    """
    y = unfold_mode3(whitened)[:, clean_pixels]
    if mask is not None:
        m = unfold_mode3(np.asarray(mask))[:, clean_pixels] != 0
        if not m.all():
            fill = _clean_band_medians(unfold_mode3(whitened), unfold_mode3(mask))
            y = np.where(m, y, fill[:, None])
    b, q = y.shape
    if q == 0:
        raise InsufficientDataError("no clean pixels selected")
    if q >= b:
        w, u = np.linalg.eigh(y @ y.T)
        order = np.argsort(w)[::-1]
        return u[:, order], np.sqrt(np.clip(w[order], 0.0, None))
    u, s, _ = np.linalg.svd(y, full_matrices=False)
    return u, s


def estimate_subspace(
    whitened: np.ndarray, clean_pixels: np.ndarray, subspace_dim: int
) -> np.ndarray:
    """Orthonormal B x P basis spanning the whitened spectral subspace."""
    if len(clean_pixels) < subspace_dim:
        raise InsufficientDataError(
            f"{len(clean_pixels)} clean pixels < subspace dim {subspace_dim}"
        )
    u, _ = clean_pixel_svd(whitened, clean_pixels)
    if subspace_dim > u.shape[1]:
        raise InsufficientDataError(
            f"subspace dim {subspace_dim} exceeds available rank {u.shape[1]}"
        )
    return u[:, :subspace_dim]


def auto_subspace_dim(singular_values: np.ndarray, q: int, bands: int) -> int:
    """Subspace dimension pick, deliberately overestimated.

    Two regimes, decided by the median squared singular value.  A
    whitened noisy matrix of q pixels has a noise bulk with energies
    near q (unit-variance noise), so a median above a fraction of q
    signals that regime; signal directions are then counted as those
    above the bulk's upper edge q*(1 + sqrt(B/q))^2.  Otherwise
    (rank-limited spectra with a near-zero tail) the count is the
    smallest P holding all but ENERGY_TAIL of the squared spectrum.
    Either count is then inflated by DIM_MARGIN and clamped:
    overestimation is safe because surplus eigen-images carry only
    noise, which the per-image denoiser removes, while underestimation
    loses signal irrecoverably.
    """
    s = np.asarray(singular_values, dtype=np.float64)
    if s.size == 0 or np.any(s < 0) or np.any(np.diff(s) > 0):
        raise ValueError("singular values must be nonnegative and non-increasing")
    energy = s * s
    total = energy.sum()
    if total <= 0:
        raise DegenerateInputError("all-zero singular spectrum")
    if np.median(energy) > 0.25 * q:
        edge = 1.1 * q * (1.0 + np.sqrt(len(s) / q)) ** 2
        p = max(int(np.count_nonzero(energy > edge)), 1)
    else:
        p = int(np.searchsorted(np.cumsum(energy), (1.0 - ENERGY_TAIL) * total) + 1)
    return min(p + DIM_MARGIN, bands, s.size, q)


def masked_projection(
    y: np.ndarray,
    m: np.ndarray,
    basis: np.ndarray,
    fill: np.ndarray | None = None,
) -> np.ndarray:
    """Subspace coefficients of one pixel using only its unmasked bands.

    Solves (E^T diag(m) E + ridge*I) z = E^T (m * y) when at least P
    bands are unmasked.  A full mask short-circuits to the exact E^T y
    (the normal equations reduce to the identity).  Under-determined
    pixels (< P unmasked bands) impute masked bands from ``fill``
    (band-wise medians of clean pixels; zeros if not provided) and
    project the completed spectrum.
    """
    y = np.asarray(y, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    p = basis.shape[1]
    nnz = int(np.count_nonzero(m))
    if nnz == m.size:
        return basis.T @ y
    if nnz >= p:
        em = basis * m[:, None]
        a = em.T @ basis
        a[np.diag_indices_from(a)] += PROJECTION_RIDGE
        return np.linalg.solve(a, basis.T @ (m * y))
    if fill is None:
        fill = np.zeros_like(y)
    return basis.T @ (m * y + (1.0 - m) * fill)


def _clean_band_medians(y: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Band-wise median over unmasked elements (all elements if none)."""
    b = y.shape[0]
    fill = np.empty(b)
    for band in range(b):
        clean = y[band, m[band] != 0]
        fill[band] = np.median(clean) if clean.size else np.median(y[band])
    return fill


def restore_sparse(
    whitened: np.ndarray,
    mask: np.ndarray,
    basis: np.ndarray,
    threads: int = 1,
) -> np.ndarray:
    """Re-express every pixel in the subspace, ignoring masked bands.

    Clean pixels are projected in one matrix product; pixels touched by
    sparse noise get a per-pixel masked least-squares solve, which
    replaces the corrupted entries by the subspace prediction.  Work is
    chunked by fixed pixel ranges, so results do not depend on
    ``threads``.
    """
    r, c, b = whitened.shape
    y = unfold_mode3(whitened)
    m = unfold_mode3(np.asarray(mask))
    out = np.empty_like(y)

    counts = (m != 0).sum(axis=0)
    clean = counts == b
    if np.any(clean):
        out[:, clean] = basis @ (basis.T @ y[:, clean])
    dirty = np.flatnonzero(~clean)
    if dirty.size:
        fill = _clean_band_medians(y, m)

        def run(chunk: np.ndarray) -> None:
            for j in chunk:
                out[:, j] = basis @ masked_projection(y[:, j], m[:, j], basis, fill)

        chunks = [dirty[i : i + _CHUNK] for i in range(0, dirty.size, _CHUNK)]
        if threads > 1 and len(chunks) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                list(pool.map(run, chunks))
        else:
            for chunk in chunks:
                run(chunk)
    return fold_mode3(out, r, c)


def denoise_eigen_images(
    restored: np.ndarray,
    basis: np.ndarray,
    denoiser: DenoiserSpec | None = None,
    threads: int = 1,
) -> np.ndarray:
    """Apply the single-band denoiser to each subspace coefficient image.

    The coefficient cube is ``restored`` projected through the basis;
    each of its P slices is denoised at sigma = 1 (the whitened-domain
    noise level).  Slices are independent; results never depend on the
    thread count.
    """
    spec = denoiser if denoiser is not None else DenoiserSpec()
    fn = spec.build()
    z = mode3_product(restored, basis.T)
    out = np.empty_like(z)
    p = z.shape[2]

    def run(idx: int) -> None:
        try:
            out[:, :, idx] = fn(z[:, :, idx], 1.0)
        except Exception as err:
            raise PipelineError(f"denoiser failed on eigen-image {idx}: {err}") from err

    if threads > 1 and p > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, range(p)))
    else:
        for idx in range(p):
            run(idx)
    return out


def denoise(
    cube: np.ndarray,
    config: PipelineConfig | None = None,
    noise: NoiseEstimate | None = None,
) -> tuple[np.ndarray, RunReport]:
    """Full mixed-noise removal; returns the denoised cube and a report.

    A precomputed :class:`NoiseEstimate` for the same cube can be passed
    to skip stage 1.  Raises :class:`PipelineError` naming the failing
    stage on any error.
    """
    cfg = config if config is not None else PipelineConfig()
    cube = validate_cube(cube)
    b = cube.shape[2]
    report = RunReport()

    def stage(name: str, fn):
        t0 = time.perf_counter()
        try:
            result = fn()
        except PipelineError:
            raise
        except Exception as err:
            raise PipelineError(f"stage '{name}' failed: {err}") from err
        report.stages.append((name, time.perf_counter() - t0))
        return result

    est: NoiseEstimate = noise if noise is not None else stage(
        "estimate_noise",
        lambda: estimate_noise(cube, em_seed=cfg.em_seed, threads=cfg.threads),
    )
    if est.mask.shape != cube.shape:
        raise PipelineError("stage 'estimate_noise' failed: mask shape mismatch")
    report.sigma_per_band = est.sigma
    report.mask_zero_fraction = float(np.mean(est.mask == 0))
    report.warnings.extend(est.warnings)

    whitened = stage("whiten", lambda: whiten(cube, est.sigma))

    min_clean = resolve_min_clean(cfg, b)

    def _select():
        idx, warns = select_clean_pixels(est.mask, min_clean)
        report.warnings.extend(warns)
        return idx

    clean_idx = stage("select_clean_pixels", _select)

    def _subspace():
        u, s = clean_pixel_svd(whitened, clean_idx, mask=est.mask)
        if cfg.subspace_dim == "auto":
            p = auto_subspace_dim(s, clean_idx.size, b)
        else:
            p = int(cfg.subspace_dim)
            if p > min(b, clean_idx.size):
                raise InsufficientDataError(
                    f"subspace dim {p} not supported by {clean_idx.size} clean "
                    f"pixels over {b} bands"
                )
        report.subspace_dim = p
        return u[:, :p]

    basis = stage("estimate_subspace", _subspace)

    restored = stage(
        "restore_sparse",
        lambda: restore_sparse(whitened, est.mask, basis, threads=cfg.threads),
    )
    coeffs = stage(
        "denoise_eigen_images",
        lambda: denoise_eigen_images(restored, basis, cfg.denoiser, threads=cfg.threads),
    )
    recon = stage("reconstruct", lambda: mode3_product(coeffs, basis))
    result = stage("unwhiten", lambda: unwhiten(recon, est.sigma))
    return result, report
