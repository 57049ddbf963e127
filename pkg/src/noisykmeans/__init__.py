"""Clustering for data observed with additive measurement error.

The package estimates the latent density by FFT-based kernel
deconvolution on a grid, clusters it with density-weighted center
iterations, and benchmarks the result against plain Lloyd k-means in a
replicated simulation harness.
"""

from .cluster import (
    Codebook,
    FitResult,
    assign_cells,
    assign_points,
    deconv_distortion,
    empirical_distortion,
    kmeans_on_density,
    lloyd_kmeans_fit,
    noisy_kmeans_fit,
    update_centers,
)
from .density import (
    DensityEstimate,
    estimate_density_direct,
    estimate_density_fft,
    theoretical_bandwidth,
)
from .experiments import (
    FAILURE_THRESHOLD,
    LabeledSample,
    ReplicationRecord,
    ReplicationSummary,
    RiskStats,
    ScenarioConfig,
    bandwidth_candidates,
    clustering_risk,
    mod2_component_means,
    run_replications,
    sample_mod1,
    sample_mod2,
    tune_bandwidth,
)
from .grid import BoundsPolicy, Grid2D, integrate_cells, linear_bin, make_grid
from .spectral import (
    Bandwidth,
    NoiseModel,
    Spectrum2D,
    angular_frequencies,
    deconv_multiplier,
    dft2_forward,
    dft2_inverse,
    kernel_ft,
    noise_cf,
    noise_cf_axis,
)

__version__ = "0.1.0"

__all__ = [
    "Bandwidth",
    "BoundsPolicy",
    "Codebook",
    "DensityEstimate",
    "FAILURE_THRESHOLD",
    "FitResult",
    "Grid2D",
    "LabeledSample",
    "NoiseModel",
    "ReplicationRecord",
    "ReplicationSummary",
    "RiskStats",
    "ScenarioConfig",
    "Spectrum2D",
    "angular_frequencies",
    "assign_cells",
    "assign_points",
    "bandwidth_candidates",
    "clustering_risk",
    "deconv_distortion",
    "deconv_multiplier",
    "dft2_forward",
    "dft2_inverse",
    "empirical_distortion",
    "estimate_density_direct",
    "estimate_density_fft",
    "integrate_cells",
    "kernel_ft",
    "kmeans_on_density",
    "linear_bin",
    "lloyd_kmeans_fit",
    "make_grid",
    "mod2_component_means",
    "noise_cf",
    "noise_cf_axis",
    "noisy_kmeans_fit",
    "run_replications",
    "sample_mod1",
    "sample_mod2",
    "theoretical_bandwidth",
    "tune_bandwidth",
    "update_centers",
]
