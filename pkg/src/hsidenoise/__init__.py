"""Mixed-noise estimation and fast subspace denoising for hyperspectral cubes."""

from .container import read_container, write_container
from .cube import (
    fold_mode3,
    frobenius_norm,
    mode3_product,
    unfold_mode3,
    validate_cube,
)
from .denoisers import DenoiserSpec, dct_denoiser, identity_denoiser
from .estimators import MixedNoiseDenoiser, MixedNoiseEstimator, check_cube
from .gmm import GmmParams, gmm_cluster, gmm_em_fit, model_selection_score
from .jsonio import SPEC_VERSION
from .metrics import MetricReport, evaluate, mask_prf, psnr, sad, ssim
from .noise import (
    NoiseEstimate,
    coarse_noise,
    coarse_noise_band,
    estimate_noise,
    is_gaussian,
    kurtosis,
    skewness,
)
from .pipeline import (
    PipelineConfig,
    RunReport,
    auto_subspace_dim,
    denoise,
    denoise_eigen_images,
    estimate_subspace,
    masked_projection,
    restore_sparse,
    select_clean_pixels,
    unwhiten,
    whiten,
)
from .simulate import (
    GroundTruth,
    add_gaussian_noniid,
    add_salt_pepper,
    add_stripes,
    case_params,
    make_clean,
    simulate_case,
    synth_clean,
)

__version__ = "0.1.0"

__all__ = [
    "SPEC_VERSION",
    "__version__",
    "read_container",
    "write_container",
    "fold_mode3",
    "frobenius_norm",
    "mode3_product",
    "unfold_mode3",
    "validate_cube",
    "DenoiserSpec",
    "dct_denoiser",
    "identity_denoiser",
    "MixedNoiseDenoiser",
    "MixedNoiseEstimator",
    "check_cube",
    "GmmParams",
    "gmm_cluster",
    "gmm_em_fit",
    "model_selection_score",
    "MetricReport",
    "evaluate",
    "mask_prf",
    "psnr",
    "sad",
    "ssim",
    "NoiseEstimate",
    "coarse_noise",
    "coarse_noise_band",
    "estimate_noise",
    "is_gaussian",
    "kurtosis",
    "skewness",
    "PipelineConfig",
    "RunReport",
    "auto_subspace_dim",
    "denoise",
    "denoise_eigen_images",
    "estimate_subspace",
    "masked_projection",
    "restore_sparse",
    "select_clean_pixels",
    "unwhiten",
    "whiten",
    "GroundTruth",
    "add_gaussian_noniid",
    "add_salt_pepper",
    "add_stripes",
    "case_params",
    "make_clean",
    "simulate_case",
    "synth_clean",
]
