"""Exception types raised across the package."""

from __future__ import annotations


class SpectralRiskError(Exception):
    """Base class for all package-specific failures."""


class DomainError(SpectralRiskError, ValueError):
    """An argument lies outside its mathematical domain."""


class AnalyticQuantileUnavailable(SpectralRiskError):
    """The model has no closed-form marginal quantile (GARCH)."""


class StationarityError(SpectralRiskError, ValueError):
    """GARCH coefficients violate covariance stationarity."""


class DegenerateScaleError(SpectralRiskError, ValueError):
    """Both scale estimates of the bandwidth rule are zero."""


class InversionError(SpectralRiskError):
    """Quantile bracketing/bisection ran out of iterations.

    Attributes:
        bracket: (lo, hi) bracket at the point of failure.
        level: the probability level being inverted.
    """

    def __init__(self, level: float, bracket: tuple[float, float]):
        self.level = level
        self.bracket = bracket
        super().__init__(
            f"quantile inversion failed at level {level}; last bracket {bracket}"
        )


class OracleConvergenceError(SpectralRiskError):
    """Mesh refinement of a ground-truth integral failed to converge."""


class InputDataError(SpectralRiskError, ValueError):
    """Malformed input file; message names the offending row/column."""
