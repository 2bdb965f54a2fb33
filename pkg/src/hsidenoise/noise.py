"""Mixed-noise statistics estimation.

Per band, a coarse noise estimate is the residual of regressing that band
on the remaining B-1 bands (spectral correlation makes the fit nearly
exact for the signal, leaving the band's uncorrelated noise).  Residuals
that look Gaussian (moment test) give the band's noise std directly;
otherwise a 2-component Gaussian mixture splits the residual into a dense
Gaussian part and sparse outliers, yielding both the Gaussian std and a
binary mask of sparse-noise locations.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cube import fold_mode3, unfold_mode3, validate_cube
from .errors import DegenerateInputError, GmmFitError, NumericalError
from .gmm import GmmParams, default_init, gmm_cluster, gmm_em_fit

# Ridge added to the band Gram matrix: RIDGE_EPS * trace(G) / (B - 1).
# Large enough to dominate float-noise eigenvalues (~1e-16 * trace) on
# rank-deficient cubes, small enough that exactly dependent bands still
# regress to ~1e-11-scale residuals.
RIDGE_EPS = 1e-12
# Per-band noise std floor, relative to the cube's value range.
SIGMA_FLOOR_REL = 1e-6
# Moment-test thresholds for "residual is approximately Gaussian".
SKEWNESS_LIMIT = 3.0
KURTOSIS_LIMIT = 10.0


def skewness(v: np.ndarray) -> float:
    """Population skewness m3 / m2^1.5."""
    v = np.asarray(v, dtype=np.float64).ravel()
    if v.size < 2:
        raise DegenerateInputError("need at least 2 samples")
    d = v - v.mean()
    m2 = float(np.mean(d * d))
    if m2 <= 0.0:
        raise DegenerateInputError("zero variance")
    return float(np.mean(d**3)) / m2**1.5


def kurtosis(v: np.ndarray) -> float:
    """Population kurtosis m4 / m2^2 (raw, not excess: Gaussian -> 3)."""
    v = np.asarray(v, dtype=np.float64).ravel()
    if v.size < 2:
        raise DegenerateInputError("need at least 2 samples")
    d = v - v.mean()
    m2 = float(np.mean(d * d))
    if m2 <= 0.0:
        raise DegenerateInputError("zero variance")
    return float(np.mean(d**4)) / (m2 * m2)


def is_gaussian(xi: np.ndarray) -> bool:
    """Moment-based normality gate.

    Tests the standardized sample statistics sqrt(n/6)*skewness and
    sqrt(n/24)*(kurtosis - 3), both asymptotically standard normal for
    Gaussian data; the band passes when the first is below 3 in
    magnitude and the second below 10.  Standardization is what gives
    the test its power: dense contamination (e.g. stripes on 10% of the
    pixels) inflates m2 enough to keep the raw kurtosis below any fixed
    constant, but not the standardized statistic.
    """
    xi = np.asarray(xi, dtype=np.float64).ravel()
    n = xi.size
    sk = skewness(xi) / np.sqrt(6.0 / n)
    ku = (kurtosis(xi) - 3.0) / np.sqrt(24.0 / n)
    return abs(sk) < SKEWNESS_LIMIT and abs(ku) < KURTOSIS_LIMIT


def _gram_and_ridge(y: np.ndarray) -> tuple[np.ndarray, float]:
    b = y.shape[0]
    g = y @ y.T
    return g, RIDGE_EPS * float(np.trace(g)) / (b - 1)


def coarse_noise_band(pixels_by_bands: np.ndarray, band: int) -> np.ndarray:
    """Residual of regressing one band on all others.

    ``pixels_by_bands`` is the (pixels, bands) view, i.e. the transpose
    of the mode-3 unfolding.  Solves the ridge-stabilized normal
    equations on the Gram submatrix for the remaining bands.
    """
    yt = np.asarray(pixels_by_bands, dtype=np.float64)
    n_bands = yt.shape[1]
    if n_bands < 2:
        raise DegenerateInputError("need at least 2 bands")
    if not 0 <= band < n_bands:
        raise IndexError(f"band {band} out of range for {n_bands} bands")
    y = yt.T
    g, ridge = _gram_and_ridge(y)
    others = np.delete(np.arange(n_bands), band)
    a = g[np.ix_(others, others)] + ridge * np.eye(n_bands - 1)
    rhs = g[others, band]
    try:
        beta = np.linalg.solve(a, rhs)
    except np.linalg.LinAlgError as err:
        raise NumericalError(f"regression system singular for band {band}") from err
    return y[band] - beta @ y[others]


def coarse_noise(cube: np.ndarray) -> np.ndarray:
    """Leave-one-band-out regression residuals for every band, shape (B, I).

    Uses one B x B Gram matrix G = Y Y^T; each band's submatrix solve is
    recovered from inv(G + ridge*I) by a rank-one (Schur complement)
    update, so the whole pass costs one inverse plus two matrix products
    instead of B independent solves.
    """
    cube = validate_cube(cube)
    y = unfold_mode3(cube)
    b = y.shape[0]
    if b < 2:
        raise DegenerateInputError("need at least 2 bands")
    g, ridge = _gram_and_ridge(y)
    try:
        gi = np.linalg.inv(g + ridge * np.eye(b))
    except np.linalg.LinAlgError as err:
        raise NumericalError("band Gram matrix singular even after ridge") from err
    gi_diag = np.diag(gi)
    bad = ~np.isfinite(gi_diag) | (gi_diag <= 0)
    if np.any(bad):
        raise NumericalError(
            f"regression system singular for band {int(np.flatnonzero(bad)[0])}"
        )
    # For band b: beta_b = A[:, b] - gi[:, b] * A[b, b] / gi[b, b], where
    # A = gi @ G = I - ridge * gi; the b-th entry cancels to exactly 0.
    a = np.eye(b) - ridge * gi
    betas = a - gi * (np.diag(a) / gi_diag)[None, :]
    np.fill_diagonal(betas, 0.0)
    return y - betas.T @ y


@dataclass
class BandNoiseReport:
    """Per-band record of how the noise std and mask were obtained."""

    sigma: float
    gaussian_gate: bool
    gmm: GmmParams | None = None
    fallback_used: bool = False

    def to_dict(self) -> dict:
        return {
            "sigma": self.sigma,
            "gaussian_gate": self.gaussian_gate,
            "gmm": self.gmm.to_dict() if self.gmm is not None else None,
            "fallback_used": self.fallback_used,
        }


@dataclass
class NoiseEstimate:
    """Per-band Gaussian stds plus the element-wise noise-type mask.

    ``sigma[b]`` is the estimated Gaussian noise std of band b (strictly
    positive).  ``mask`` is a uint8 cube: 1 = Gaussian-only corruption,
    0 = mixed (sparse) corruption at that element.
    """

    sigma: np.ndarray
    mask: np.ndarray
    bands: list[BandNoiseReport] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def covariance_diag(self) -> np.ndarray:
        return self.sigma**2

    def to_dict(self) -> dict:
        return {
            "sigma_per_band": self.sigma.tolist(),
            "bands": [b.to_dict() for b in self.bands],
            "warnings": list(self.warnings),
        }


def _estimate_band(
    xi: np.ndarray, floor: float, em_seed: int, band: int
) -> tuple[float, np.ndarray, BandNoiseReport, list[str]]:
    warnings: list[str] = []
    ones = np.ones(xi.shape, dtype=np.uint8)
    plain_std = float(np.std(xi))
    if plain_std <= floor:
        # Residual is numerically quiet; nothing to split.
        return floor, ones, BandNoiseReport(floor, True), warnings
    try:
        gate = is_gaussian(xi)
    except DegenerateInputError:
        gate = False
    if gate:
        return max(plain_std, floor), ones, BandNoiseReport(max(plain_std, floor), True), warnings
    try:
        psi = gmm_em_fit(
            xi,
            n_components=2,
            init=default_init(xi, 2),
            rng=np.random.default_rng([em_seed, band]),
        )
        labels = gmm_cluster(xi, psi)
        gaussian_group = _gaussian_component(psi)
        member = labels == gaussian_group
        if not np.any(member):
            raise GmmFitError("Gaussian group is empty")
        sigma = max(float(np.std(xi[member])), floor)
        return sigma, member.astype(np.uint8), BandNoiseReport(sigma, False, psi), warnings
    except GmmFitError as err:
        med = float(np.median(xi))
        sigma = max(1.4826 * float(np.median(np.abs(xi - med))), floor)
        mask = (np.abs(xi) <= 4.0 * sigma).astype(np.uint8)
        warnings.append(f"band {band}: mixture fit failed ({err}); MAD fallback used")
        return sigma, mask, BandNoiseReport(sigma, False, None, fallback_used=True), warnings


def _gaussian_component(psi: GmmParams) -> int:
    """Index of the component treated as Gaussian noise.

    The denser group (larger mixing proportion) is Gaussian; an exact
    proportion tie picks the smaller-variance component.
    """
    w = psi.weights
    if w[0] == w[1]:
        return int(np.argmin(psi.variances))
    return int(np.argmax(w))


def estimate_noise(
    cube: np.ndarray,
    em_seed: int = 0,
    threads: int = 1,
) -> NoiseEstimate:
    """Estimate per-band Gaussian noise stds and the sparse-noise mask.

    Bands whose regression residual passes the normality gate get
    ``sigma = std(residual)`` and an all-ones mask column.  Other bands
    are split by a seeded 2-component mixture fit: the denser component
    is Gaussian noise (its std becomes sigma), the rest is flagged as
    sparse in the mask.  Mixture failures fall back to a MAD-based std
    with a 4-sigma outlier mask and leave a warning.

    Band results are independent, so ``threads > 1`` merely parallelizes
    the per-band loop; output is identical for any thread count.
    """
    cube = validate_cube(cube)
    r, c, b = cube.shape
    resid = coarse_noise(cube)
    rng_width = float(cube.max() - cube.min())
    floor = SIGMA_FLOOR_REL * (rng_width if rng_width > 0 else 1.0)

    sigma = np.empty(b)
    mask_flat = np.empty((b, r * c), dtype=np.uint8)
    reports: list[BandNoiseReport | None] = [None] * b
    warnings: list[str] = []

    def run(band: int):
        return _estimate_band(resid[band], floor, em_seed, band)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, range(b)))
    else:
        results = [run(band) for band in range(b)]
    for band, (s, m, rep, warn) in enumerate(results):
        sigma[band] = s
        mask_flat[band] = m
        reports[band] = rep
        warnings.extend(warn)

    mask = fold_mode3(mask_flat, r, c).astype(np.uint8)
    return NoiseEstimate(sigma, mask, list(reports), warnings)
