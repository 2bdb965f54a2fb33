import numpy as np
import pytest

import hsidenoise as hd


@pytest.fixture(scope="session")
def clean64():
    """Shared 64x64x60 rank-8 clean cube (read-only)."""
    return hd.synth_clean(64, 64, 60, 8, seed=0)


@pytest.fixture(scope="session")
def case1(clean64):
    noisy, truth = hd.simulate_case(clean64, 1, seed=0)
    return noisy, truth


@pytest.fixture(scope="session")
def case4(clean64):
    noisy, truth = hd.simulate_case(clean64, 4, seed=0)
    return noisy, truth


@pytest.fixture(scope="session")
def noise_est_case1(case1):
    return hd.estimate_noise(case1[0], em_seed=0)


@pytest.fixture(scope="session")
def noise_est_case4(case4):
    return hd.estimate_noise(case4[0], em_seed=0)


def random_orthonormal(rows, cols, rng):
    q, _ = np.linalg.qr(rng.standard_normal((rows, cols)))
    return q[:, :cols]
