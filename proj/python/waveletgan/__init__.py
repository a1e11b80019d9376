"""WaveletGAN: learnable Mexican-hat wavelet deconvolution for GAN noise
homogenization, with a desk-scale training loop and proxy-FID evaluation.

The heavy lifting lives in the compiled extension `waveletgan._core`.
"""

from waveletgan._core import (  # noqa: F401
    METRIC_LABEL,
    Gan,
    WaveletDeconv,
    build_gan,
    convolve_same,
    extract_features,
    fit_gaussian,
    frechet_distance,
    gradcheck,
    load_gan,
    load_idx_images,
    load_idx_labels,
    mexican_hat,
    mexican_hat_dt,
    sample_kernel,
    sample_kernel_dscale,
    scaled_wavelet,
    synthetic_shapes,
)

__all__ = [
    "METRIC_LABEL",
    "Gan",
    "WaveletDeconv",
    "build_gan",
    "convolve_same",
    "extract_features",
    "fit_gaussian",
    "frechet_distance",
    "gradcheck",
    "load_gan",
    "load_idx_images",
    "load_idx_labels",
    "mexican_hat",
    "mexican_hat_dt",
    "sample_kernel",
    "sample_kernel_dscale",
    "scaled_wavelet",
    "synthetic_shapes",
]
