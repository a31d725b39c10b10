"""Spectral / distortion risk measure estimation.

Two estimators of spectrum-weighted loss quantiles — the classical
L-statistic on order statistics and a smoothed-CDF (kernel) estimator with
plug-in bandwidth — plus limit-variance intervals, bootstrap confidence
intervals, and reproducible Monte-Carlo experiment engines.
"""

__version__ = "0.1.0"

from ._accel import NUMBA_ENABLED, backend_name
from .distributions import (ModelSpec, SampleBatch, cdf, loss_quantile,
                            quantile, sample, simulate_garch, true_srm)
from .kernel import (SWANEPOEL_CONSTANT, EndpointWeight, KernelCdf,
                     KernelEstimatorConfig, bandwidth_swanepoel,
                     nearly_linear_bounds_check, weighted_sup_distance)
from .riskmeasure import (AsymptoticSpec, DistortionFunction, EstimateReport,
                          LStatWeights, RiskSpectrum, asymptotic_variance,
                          clt_interval, empirical_srm, kernel_srm,
                          lstat_weights, parse_spectrum, validate_admissible)

__all__ = [
    "__version__",
    "NUMBA_ENABLED",
    "backend_name",
    "ModelSpec",
    "SampleBatch",
    "cdf",
    "loss_quantile",
    "quantile",
    "sample",
    "simulate_garch",
    "true_srm",
    "SWANEPOEL_CONSTANT",
    "EndpointWeight",
    "KernelCdf",
    "KernelEstimatorConfig",
    "bandwidth_swanepoel",
    "nearly_linear_bounds_check",
    "weighted_sup_distance",
    "AsymptoticSpec",
    "DistortionFunction",
    "EstimateReport",
    "LStatWeights",
    "RiskSpectrum",
    "asymptotic_variance",
    "clt_interval",
    "empirical_srm",
    "kernel_srm",
    "lstat_weights",
    "parse_spectrum",
    "validate_admissible",
]
