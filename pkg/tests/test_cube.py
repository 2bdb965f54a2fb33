import numpy as np
import pytest

from hsidenoise import (
    fold_mode3,
    frobenius_norm,
    mode3_product,
    unfold_mode3,
    validate_cube,
)
from hsidenoise.errors import ShapeError


class TestUnfold:
    def test_single_pixel_spectrum(self):
        cube = np.array([1.0, 2.0, 3.0]).reshape(1, 1, 3)
        np.testing.assert_array_equal(unfold_mode3(cube), [[1.0], [2.0], [3.0]])

    def test_two_pixel_layout(self):
        # pixel spectra (1,2) and (3,4) become the two columns
        cube = np.array([[[1.0, 2.0]], [[3.0, 4.0]]])
        assert cube.shape == (2, 1, 2)
        np.testing.assert_array_equal(unfold_mode3(cube), [[1.0, 3.0], [2.0, 4.0]])

    def test_pixel_linearization_is_column_major(self):
        rng = np.random.default_rng(3)
        cube = rng.random((4, 5, 6))
        m = unfold_mode3(cube)
        # pixel j = row + rows * col
        np.testing.assert_array_equal(m[:, 1], cube[1, 0, :])
        np.testing.assert_array_equal(m[:, 4], cube[0, 1, :])
        np.testing.assert_array_equal(m[:, 4 + 3], cube[3, 1, :])

    def test_round_trip(self):
        rng = np.random.default_rng(7)
        cube = rng.random((4, 5, 6))
        np.testing.assert_array_equal(fold_mode3(unfold_mode3(cube), 4, 5), cube)


class TestFold:
    def test_single_pixel(self):
        m = np.array([[1.0], [2.0], [3.0]])
        np.testing.assert_array_equal(fold_mode3(m, 1, 1).ravel(), [1.0, 2.0, 3.0])

    def test_round_trip(self):
        rng = np.random.default_rng(11)
        cube = rng.random((3, 4, 5))
        np.testing.assert_array_equal(fold_mode3(unfold_mode3(cube), 3, 4), cube)

    def test_dimension_mismatch(self):
        with pytest.raises(ShapeError):
            fold_mode3(np.zeros((2, 2)), 3, 1)


class TestMode3Product:
    def test_identity(self):
        rng = np.random.default_rng(5)
        cube = rng.random((3, 4, 5))
        np.testing.assert_allclose(mode3_product(cube, np.eye(5)), cube)

    def test_row_sum(self):
        cube = np.array([1.0, 2.0]).reshape(1, 1, 2)
        out = mode3_product(cube, np.array([[1.0, 1.0]]))
        assert out.shape == (1, 1, 1)
        assert out[0, 0, 0] == 3.0

    def test_matches_direct_matrix_multiply(self):
        rng = np.random.default_rng(9)
        cube = rng.random((3, 3, 4))
        mat = rng.random((2, 4))
        np.testing.assert_allclose(
            unfold_mode3(mode3_product(cube, mat)), mat @ unfold_mode3(cube),
            rtol=0, atol=1e-14,
        )

    def test_shape_error(self):
        with pytest.raises(ShapeError):
            mode3_product(np.zeros((2, 2, 3)), np.zeros((2, 4)))

    def test_orthogonal_projection_property(self):
        rng = np.random.default_rng(13)
        cube = rng.random((5, 6, 8))
        e, _ = np.linalg.qr(rng.standard_normal((8, 3)))
        proj = mode3_product(mode3_product(cube, e.T), e)
        ref = fold_mode3(e @ e.T @ unfold_mode3(cube), 5, 6)
        np.testing.assert_allclose(proj, ref, rtol=1e-12, atol=1e-12)

    def test_orthogonal_norm_invariance(self):
        rng = np.random.default_rng(17)
        cube = rng.random((4, 4, 6))
        q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
        n0 = frobenius_norm(cube)
        n1 = frobenius_norm(mode3_product(cube, q))
        assert abs(n1 - n0) <= 1e-10 * n0


class TestFrobenius:
    def test_zero(self):
        assert frobenius_norm(np.zeros((2, 3, 4))) == 0.0

    def test_three_four_five(self):
        assert frobenius_norm(np.array([3.0, 4.0]).reshape(1, 1, 2)) == 5.0

    def test_slice_additivity(self):
        rng = np.random.default_rng(19)
        cube = rng.random((4, 5, 6))
        per_band = sum(np.linalg.norm(cube[:, :, b]) ** 2 for b in range(6))
        np.testing.assert_allclose(frobenius_norm(cube) ** 2, per_band, rtol=1e-12)


class TestValidateCube:
    def test_rejects_nan(self):
        cube = np.zeros((2, 2, 2))
        cube[0, 0, 0] = np.nan
        with pytest.raises(ShapeError):
            validate_cube(cube)

    def test_rejects_wrong_ndim(self):
        with pytest.raises(ShapeError):
            validate_cube(np.zeros((2, 2)))

    def test_accepts_valid(self):
        out = validate_cube(np.zeros((2, 2, 2), dtype=np.float32))
        assert out.dtype == np.float64
