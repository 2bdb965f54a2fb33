import numpy as np
import pytest

import hsidenoise as hd
from hsidenoise.cube import mode3_product, unfold_mode3
from hsidenoise.errors import DegenerateInputError, InsufficientDataError, PipelineError
from hsidenoise.pipeline import (
    PipelineConfig,
    auto_subspace_dim,
    clean_pixel_svd,
    denoise,
    denoise_eigen_images,
    estimate_subspace,
    masked_projection,
    restore_sparse,
    select_clean_pixels,
    unwhiten,
    whiten,
)

from conftest import random_orthonormal


class TestWhiten:
    def test_unit_sigma_identity(self):
        rng = np.random.default_rng(0)
        cube = rng.random((4, 4, 5))
        np.testing.assert_array_equal(whiten(cube, np.ones(5)), cube)

    def test_round_trip(self):
        rng = np.random.default_rng(1)
        cube = rng.random((4, 4, 5))
        sigma = rng.uniform(0.5, 2.0, 5)
        back = unwhiten(whiten(cube, sigma), sigma)
        np.testing.assert_allclose(back, cube, rtol=1e-12, atol=0)

    def test_band_scaling(self):
        cube = np.ones((2, 2, 2))
        sigma = np.array([1.0, 2.0])
        out = whiten(cube, sigma)
        np.testing.assert_array_equal(out[:, :, 1], 0.5)

    def test_zero_sigma_rejected(self):
        with pytest.raises(ValueError):
            whiten(np.ones((2, 2, 2)), np.array([1.0, 0.0]))


class TestSelectCleanPixels:
    def test_all_ones_mask(self):
        mask = np.ones((4, 5, 3), dtype=np.uint8)
        idx, warns = select_clean_pixels(mask, 1)
        assert idx.size == 20
        assert warns == []

    def test_single_dirty_pixel_excluded(self):
        mask = np.ones((4, 5, 3), dtype=np.uint8)
        # pixel 7 in mode-3 linearization: row 3, col 1
        mask[3, 1, 2] = 0
        idx, _ = select_clean_pixels(mask, 1)
        assert 7 not in idx
        assert idx.size == 19

    def test_case4_truth_mask_contamination(self, case4):
        _, truth = case4
        idx, warns = select_clean_pixels(truth.mask, 400)
        m = unfold_mode3(truth.mask)
        dirty = (m == 0).any(axis=0)
        assert dirty[idx].mean() <= 0.05
        assert warns == []

    def test_relaxation_ladder(self):
        mask = np.zeros((4, 4, 10), dtype=np.uint8)
        mask[:, :, :9] = 1  # every pixel 90% clean: below the 95% rung
        idx, warns = select_clean_pixels(mask, 4)
        assert idx.size == 16
        assert len(warns) == 2


class TestSubspace:
    def test_rank_one_direction(self):
        rng = np.random.default_rng(3)
        v = rng.standard_normal(6)
        coeffs = rng.random((5, 4)) + 0.5
        cube = coeffs[:, :, None] * v[None, None, :]
        e = estimate_subspace(cube, np.arange(20), 1)
        v_unit = v / np.linalg.norm(v)
        assert min(np.linalg.norm(e[:, 0] - v_unit), np.linalg.norm(e[:, 0] + v_unit)) <= 1e-10

    def test_rank_p_projection_residual(self):
        rng = np.random.default_rng(4)
        basis = random_orthonormal(12, 3, rng)
        z = rng.standard_normal((3, 200))
        y = basis @ z + 1e-9 * rng.standard_normal((12, 200))
        cube = hd.fold_mode3(y, 10, 20)
        e = estimate_subspace(cube, np.arange(200), 3)
        resid = y - e @ (e.T @ y)
        assert np.linalg.norm(resid) / np.linalg.norm(y) <= 1e-6

    def test_orthonormal_columns(self, case1, noise_est_case1):
        noisy, _ = case1
        wh = whiten(noisy, noise_est_case1.sigma)
        e = estimate_subspace(wh, np.arange(64 * 64), 8)
        np.testing.assert_allclose(e.T @ e, np.eye(8), rtol=0, atol=1e-10)

    def test_insufficient_pixels(self):
        cube = np.random.default_rng(5).random((4, 4, 6))
        with pytest.raises(InsufficientDataError):
            estimate_subspace(cube, np.arange(2), 3)

    def test_masked_entries_imputed(self):
        # a single gross outlier in a selected column must not dominate
        rng = np.random.default_rng(6)
        basis = random_orthonormal(10, 2, rng)
        y = basis @ (rng.random((2, 100)) + 1.0)
        cube = hd.fold_mode3(y, 10, 10)
        mask = np.ones((10, 10, 10), dtype=np.uint8)
        corrupted = cube.copy()
        corrupted[0, 0, 3] = 1e6
        mask[0, 0, 3] = 0
        _, s_raw = clean_pixel_svd(corrupted, np.arange(100))
        assert s_raw[0] > 1e5  # outlier dominates without the mask
        _, s = clean_pixel_svd(corrupted, np.arange(100), mask=mask)
        _, s_clean = clean_pixel_svd(cube, np.arange(100))
        assert abs(s[0] - s_clean[0]) / s_clean[0] <= 1e-3
        assert s[2] / s[0] <= 0.05


class TestAutoSubspaceDim:
    def test_single_spike(self):
        s = np.array([10.0] + [0.0] * 19)
        assert auto_subspace_dim(s, 500, 20) == 6

    def test_exact_rank_three(self):
        rng = np.random.default_rng(7)
        y = random_orthonormal(20, 3, rng) @ rng.standard_normal((3, 300))
        s = np.linalg.svd(y, compute_uv=False)
        assert auto_subspace_dim(s, 300, 20) == 8

    def test_clamped_to_bands(self):
        s = np.linspace(10, 1, 8)
        assert auto_subspace_dim(s, 100, 8) <= 8

    def test_all_zero_raises(self):
        with pytest.raises(DegenerateInputError):
            auto_subspace_dim(np.zeros(5), 10, 5)

    def test_noisy_whitened_spectrum_finds_signal_count(self):
        rng = np.random.default_rng(8)
        q, b, rank = 4000, 40, 6
        basis = random_orthonormal(b, rank, rng)
        y = basis @ (10.0 * rng.standard_normal((rank, q))) + rng.standard_normal((b, q))
        s = np.linalg.svd(y, compute_uv=False)
        assert auto_subspace_dim(s, q, b) == rank + 5


class TestMaskedProjection:
    def test_full_mask_equals_adjoint(self):
        rng = np.random.default_rng(9)
        e = random_orthonormal(15, 4, rng)
        y = rng.standard_normal(15)
        z = masked_projection(y, np.ones(15), e)
        np.testing.assert_allclose(z, e.T @ y, rtol=0, atol=1e-10)

    def test_recovers_exact_subspace_vector(self):
        rng = np.random.default_rng(10)
        e = random_orthonormal(20, 4, rng)
        z_true = rng.standard_normal(4)
        y = e @ z_true
        m = np.ones(20)
        m[rng.permutation(20)[:8]] = 0
        z = masked_projection(y, m, e)
        np.testing.assert_allclose(z, z_true, rtol=0, atol=1e-6)

    def test_matches_dense_normal_equations(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            e = random_orthonormal(20, 4, rng)
            y = rng.standard_normal(20)
            m = np.zeros(20)
            m[rng.permutation(20)[: rng.integers(4, 20)]] = 1
            z = masked_projection(y, m, e)
            a = e.T @ np.diag(m) @ e + 1e-8 * np.eye(4)
            z_ref = np.linalg.solve(a, e.T @ np.diag(m) @ y)
            np.testing.assert_allclose(z, z_ref, rtol=1e-8, atol=1e-12)

    def test_underdetermined_fallback_uses_fill(self):
        rng = np.random.default_rng(11)
        e = random_orthonormal(10, 6, rng)
        y = rng.standard_normal(10)
        m = np.zeros(10)
        m[:3] = 1  # fewer unmasked bands than dimensions
        fill = rng.standard_normal(10)
        z = masked_projection(y, m, e, fill=fill)
        np.testing.assert_allclose(z, e.T @ (m * y + (1 - m) * fill), atol=1e-12)


class TestRestoreSparse:
    def test_full_mask_in_span_is_identity(self):
        rng = np.random.default_rng(12)
        e = random_orthonormal(10, 3, rng)
        y = e @ rng.standard_normal((3, 24))
        cube = hd.fold_mode3(y, 4, 6)
        mask = np.ones((4, 6, 10), dtype=np.uint8)
        out = restore_sparse(cube, mask, e)
        np.testing.assert_allclose(out, cube, rtol=0, atol=1e-8)

    def test_masked_band_restored(self):
        rng = np.random.default_rng(13)
        e = random_orthonormal(10, 3, rng)
        y = e @ rng.standard_normal((3, 24))
        cube = hd.fold_mode3(y, 4, 6)
        corrupted = cube.copy()
        corrupted[2, 3, 7] = 99.0
        mask = np.ones((4, 6, 10), dtype=np.uint8)
        mask[2, 3, 7] = 0
        out = restore_sparse(corrupted, mask, e)
        assert abs(out[2, 3, 7] - cube[2, 3, 7]) <= 1e-6

    def test_thread_count_invariance(self, case4, noise_est_case4):
        noisy, _ = case4
        est = noise_est_case4
        wh = whiten(noisy, est.sigma)
        e = estimate_subspace(wh, select_clean_pixels(est.mask, 61)[0], 8)
        a = restore_sparse(wh, est.mask, e, threads=1)
        b = restore_sparse(wh, est.mask, e, threads=8)
        np.testing.assert_array_equal(a, b)


class TestEigenImageDenoising:
    def test_identity_denoiser_is_projection(self):
        rng = np.random.default_rng(14)
        e = random_orthonormal(8, 3, rng)
        cube = rng.random((6, 7, 8))
        z = denoise_eigen_images(cube, e, hd.DenoiserSpec("identity"))
        np.testing.assert_array_equal(z, mode3_product(cube, e.T))

    def test_constant_slice_preserved(self):
        e = np.eye(4)[:, :2]
        cube = np.zeros((12, 12, 4))
        cube[:, :, 0] = 0.7
        z = denoise_eigen_images(cube, e, hd.DenoiserSpec("dct"))
        np.testing.assert_allclose(z[:, :, 0], 0.7, rtol=0, atol=1e-12)

    def test_failure_names_slice(self):
        def boom(img, sigma):
            raise RuntimeError("nope")

        from hsidenoise.denoisers import REGISTRY

        REGISTRY["_boom"] = boom
        try:
            with pytest.raises(PipelineError, match="eigen-image 0"):
                denoise_eigen_images(
                    np.ones((9, 9, 2)), np.eye(2), hd.DenoiserSpec("_boom")
                )
        finally:
            del REGISTRY["_boom"]


class TestFullPipeline:
    def test_noiseless_low_rank_fixed_point(self):
        clean = hd.synth_clean(24, 24, 16, 4, seed=15)
        cfg = PipelineConfig(subspace_dim=6, denoiser=hd.DenoiserSpec("identity"))
        out, report = denoise(clean, cfg)
        rel = np.linalg.norm(out - clean) / np.linalg.norm(clean)
        assert rel <= 1e-4

    def test_full_mask_identity_reduces_to_projection(self, case1, noise_est_case1):
        noisy, _ = case1
        est = noise_est_case1
        cfg = PipelineConfig(subspace_dim=8, denoiser=hd.DenoiserSpec("identity"))
        out, _ = denoise(noisy, cfg)
        wh = whiten(noisy, est.sigma)
        e = estimate_subspace(wh, np.arange(64 * 64), 8)
        ref = unwhiten(mode3_product(mode3_product(wh, e.T), e), est.sigma)
        np.testing.assert_allclose(out, ref, rtol=0, atol=1e-10)

    def test_output_finite(self, case4):
        noisy, _ = case4
        out, _ = denoise(noisy, PipelineConfig(subspace_dim=8))
        assert np.all(np.isfinite(out))

    def test_report_contents(self, case1):
        noisy, _ = case1
        _, report = denoise(noisy, PipelineConfig())
        names = [n for n, _ in report.stages]
        assert names == [
            "estimate_noise",
            "whiten",
            "select_clean_pixels",
            "estimate_subspace",
            "restore_sparse",
            "denoise_eigen_images",
            "reconstruct",
            "unwhiten",
        ]
        assert report.subspace_dim >= 1
        assert report.sigma_per_band.shape == (60,)
        d = report.to_dict()
        assert set(d) == {
            "stages",
            "sigma_per_band",
            "mask_zero_fraction",
            "subspace_dim",
            "warnings",
        }

    def test_precomputed_noise_reused(self, case1, noise_est_case1):
        noisy, _ = case1
        out1, rep1 = denoise(noisy, PipelineConfig(subspace_dim=8),
                             noise=noise_est_case1)
        assert [n for n, _ in rep1.stages][0] == "whiten"
        out2, _ = denoise(noisy, PipelineConfig(subspace_dim=8))
        np.testing.assert_array_equal(out1, out2)

    def test_bad_subspace_dim_config(self):
        with pytest.raises(ValueError):
            PipelineConfig(subspace_dim="bogus")
        with pytest.raises(ValueError):
            PipelineConfig(subspace_dim=0)

    def test_auto_dim_close_to_true_rank_quality(self, clean64, case1):
        noisy, _ = case1
        out_auto, rep = denoise(noisy, PipelineConfig(subspace_dim="auto"))
        out_true, _ = denoise(noisy, PipelineConfig(subspace_dim=8))
        gap = abs(
            hd.evaluate(clean64, out_auto).mpsnr - hd.evaluate(clean64, out_true).mpsnr
        )
        assert rep.subspace_dim >= 8
        assert gap < 1.0

    def test_stage_error_names_stage(self):
        # a single-band cube cannot be regressed on its (empty) remainder
        cube = np.random.default_rng(16).random((6, 6, 1))
        with pytest.raises(PipelineError, match="estimate_noise"):
            denoise(cube, PipelineConfig())
