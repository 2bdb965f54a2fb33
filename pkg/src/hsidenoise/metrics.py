"""Image quality metrics: per-band PSNR and SSIM, spectral angle, and
mask-recovery precision/recall.

PSNR of a perfectly reconstructed band is reported as ``inf`` and
excluded from the band mean (the excluded count is kept in the report).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ShapeError
from .jsonio import write_json

SSIM_WINDOW = 8
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def psnr(ref_band: np.ndarray, test_band: np.ndarray, peak: float = 1.0) -> float:
    """10 log10(peak^2 / MSE); inf when the bands are identical."""
    ref_band = np.asarray(ref_band, dtype=np.float64)
    test_band = np.asarray(test_band, dtype=np.float64)
    if ref_band.shape != test_band.shape:
        raise ShapeError(f"shape mismatch {ref_band.shape} vs {test_band.shape}")
    if peak <= 0:
        raise ValueError("peak must be positive")
    mse = float(np.mean((ref_band - test_band) ** 2))
    if mse == 0.0:
        return float("inf")
    return 10.0 * np.log10(peak * peak / mse)


def ssim(ref_band: np.ndarray, test_band: np.ndarray, peak: float = 1.0) -> float:
    """Single-scale SSIM, 8x8 uniform sliding window, mean over windows.

    C1 = (0.01 peak)^2, C2 = (0.03 peak)^2; window moments are
    population-normalized.  Result lies in [-1, 1]; identical inputs
    give 1.
    """
    x = np.asarray(ref_band, dtype=np.float64)
    y = np.asarray(test_band, dtype=np.float64)
    if x.shape != y.shape:
        raise ShapeError(f"shape mismatch {x.shape} vs {y.shape}")
    if min(x.shape) < SSIM_WINDOW:
        raise ShapeError(f"image must be at least {SSIM_WINDOW}x{SSIM_WINDOW}")
    win = (SSIM_WINDOW, SSIM_WINDOW)
    xw = sliding_window_view(x, win)
    yw = sliding_window_view(y, win)
    mx = xw.mean(axis=(-2, -1))
    my = yw.mean(axis=(-2, -1))
    vx = (xw * xw).mean(axis=(-2, -1)) - mx * mx
    vy = (yw * yw).mean(axis=(-2, -1)) - my * my
    cov = (xw * yw).mean(axis=(-2, -1)) - mx * my
    c1 = (SSIM_K1 * peak) ** 2
    c2 = (SSIM_K2 * peak) ** 2
    s = ((2 * mx * my + c1) * (2 * cov + c2)) / (
        (mx * mx + my * my + c1) * (vx + vy + c2)
    )
    return float(s.mean())


def sad(ref: np.ndarray, test: np.ndarray) -> tuple[float, int]:
    """Mean spectral angle in radians, plus the count of excluded pixels.

    The angle at each pixel is arccos of the normalized inner product of
    the two spectra; pixels where either spectrum has zero norm are
    excluded from the mean and counted.
    """
    ref = np.asarray(ref, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if ref.shape != test.shape:
        raise ShapeError(f"shape mismatch {ref.shape} vs {test.shape}")
    a = ref.reshape(-1, ref.shape[2])
    b = test.reshape(-1, test.shape[2])
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    valid = (na > 0) & (nb > 0)
    excluded = int(np.count_nonzero(~valid))
    if not np.any(valid):
        return 0.0, excluded
    cos = np.sum(a[valid] * b[valid], axis=1) / (na[valid] * nb[valid])
    angles = np.arccos(np.clip(cos, -1.0, 1.0))
    return float(angles.mean()), excluded


def mask_prf(est: np.ndarray, truth: np.ndarray) -> tuple[float, float, float]:
    """Precision/recall/F1 of sparse-noise detection.

    Positives are mask zeros (sparse-corrupted elements).  Undefined
    ratios (no predicted or no true positives) are reported as 0.
    """
    est = np.asarray(est)
    truth = np.asarray(truth)
    if est.shape != truth.shape:
        raise ShapeError(f"shape mismatch {est.shape} vs {truth.shape}")
    pred = est == 0
    pos = truth == 0
    tp = float(np.count_nonzero(pred & pos))
    precision = tp / pred.sum() if pred.any() else 0.0
    recall = tp / pos.sum() if pos.any() else 0.0
    f1 = (
        2 * precision * recall / (precision + recall)
        if precision + recall > 0
        else 0.0
    )
    return precision, recall, f1


@dataclass
class MetricReport:
    psnr_per_band: np.ndarray
    ssim_per_band: np.ndarray
    mpsnr: float
    mssim: float
    msad: float
    psnr_inf_bands: int
    sad_excluded_pixels: int
    mask_precision: float | None = None
    mask_recall: float | None = None
    mask_f1: float | None = None

    def to_dict(self) -> dict:
        def _j(v: float) -> float | str:
            return v if np.isfinite(v) else "inf"

        out = {
            "psnr_per_band": [_j(v) for v in self.psnr_per_band],
            "ssim_per_band": self.ssim_per_band.tolist(),
            "mpsnr": _j(self.mpsnr),
            "mssim": self.mssim,
            "msad": self.msad,
            "psnr_inf_bands": self.psnr_inf_bands,
            "sad_excluded_pixels": self.sad_excluded_pixels,
        }
        if self.mask_f1 is not None:
            out["mask_precision"] = self.mask_precision
            out["mask_recall"] = self.mask_recall
            out["mask_f1"] = self.mask_f1
        return out

    def save(self, path) -> None:
        write_json(path, self.to_dict())

    def save_csv(self, path: str | Path) -> None:
        """Per-band (band, psnr_db, ssim) table for external plotting."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["band", "psnr_db", "ssim"])
            for b, (p, s) in enumerate(zip(self.psnr_per_band, self.ssim_per_band)):
                writer.writerow([b, p, s])


def evaluate(
    ref: np.ndarray,
    test: np.ndarray,
    peak: float = 1.0,
    est_mask: np.ndarray | None = None,
    true_mask: np.ndarray | None = None,
) -> MetricReport:
    """Assemble per-band and mean metrics for a reconstruction."""
    ref = np.asarray(ref, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if ref.shape != test.shape:
        raise ShapeError(f"shape mismatch {ref.shape} vs {test.shape}")
    bands = ref.shape[2]
    psnr_b = np.array([psnr(ref[:, :, b], test[:, :, b], peak) for b in range(bands)])
    ssim_b = np.array([ssim(ref[:, :, b], test[:, :, b], peak) for b in range(bands)])
    finite = np.isfinite(psnr_b)
    mpsnr = float(psnr_b[finite].mean()) if finite.any() else float("inf")
    msad, excluded = sad(ref, test)
    report = MetricReport(
        psnr_per_band=psnr_b,
        ssim_per_band=ssim_b,
        mpsnr=mpsnr,
        mssim=float(ssim_b.mean()),
        msad=msad,
        psnr_inf_bands=int(np.count_nonzero(~finite)),
        sad_excluded_pixels=excluded,
    )
    if est_mask is not None and true_mask is not None:
        p, r, f1 = mask_prf(est_mask, true_mask)
        report.mask_precision = p
        report.mask_recall = r
        report.mask_f1 = f1
    return report
