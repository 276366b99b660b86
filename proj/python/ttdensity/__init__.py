"""Layered tensor-train surrogates for concentrated probability densities.

The heavy lifting lives in the compiled ``_ttdensity`` extension; this
package re-exports its public surface.
"""

from _ttdensity import (  # noqa: F401
    BuildOptions,
    DarcyLiteForward,
    FitOptions,
    GaussianNoiseModel,
    LayerPartition,
    LayeredDensity,
    LogDensity,
    MCMCConfig,
    MCMCResult,
    QoiEstimate,
    TransportMap,
    banana_density,
    banana_exact_transport,
    build,
    darcy_log_posterior,
    equidistant_partition,
    gaussian_density,
    laplace_affine,
    perturbed_prior,
    run_experiment,
    rwm_mcmc,
    synthesize_observations,
    validate_config,
)

__all__ = [
    "BuildOptions",
    "DarcyLiteForward",
    "FitOptions",
    "GaussianNoiseModel",
    "LayerPartition",
    "LayeredDensity",
    "LogDensity",
    "MCMCConfig",
    "MCMCResult",
    "QoiEstimate",
    "TransportMap",
    "banana_density",
    "banana_exact_transport",
    "build",
    "darcy_log_posterior",
    "equidistant_partition",
    "gaussian_density",
    "laplace_affine",
    "perturbed_prior",
    "run_experiment",
    "rwm_mcmc",
    "synthesize_observations",
    "validate_config",
]

__version__ = "0.1.0"
