"""Simulation models: samplers, quantile functions, and ground-truth
risk-measure values used by the Monte-Carlo experiments.

Draws from the heavy-tail models are interpreted as LOSSES by default
(large positive draw = large loss); ``draws_as="returns"`` flips the
orientation.  Either way the estimators and truths share one convention,
so mean-squared-error comparisons are internally consistent.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import ndtr, ndtri
from scipy.stats import t as _student_t

from . import _accel
from .errors import (AnalyticQuantileUnavailable, DomainError,
                     StationarityError)
from .kernel import bandwidth_swanepoel
from .riskmeasure import RiskSpectrum, integrate_unit_interval
from .rng import substream

__all__ = [
    "ModelSpec",
    "SampleBatch",
    "quantile",
    "cdf",
    "loss_quantile",
    "sample",
    "simulate_garch",
    "true_srm",
]

_KINDS = ("gpd", "student_t", "normal", "garch")


@dataclass(frozen=True)
class ModelSpec:
    """One of the four simulation models.

    ``shape`` is the GPD tail index, ``df`` the Student-t degrees of freedom,
    and the three ``garch_*`` coefficients parameterize the squared-volatility
    recursion s2' = omega + alpha1*x^2 + beta1*s2.
    """

    kind: str
    shape: Optional[float] = None
    df: Optional[float] = None
    garch_alpha1: Optional[float] = None
    garch_beta1: Optional[float] = None
    garch_omega: Optional[float] = None
    scale: float = 1.0
    location: float = 0.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise DomainError(f"unknown model kind {self.kind!r}")
        if self.scale <= 0.0:
            raise DomainError("scale must be positive")
        if self.kind == "gpd":
            if self.shape is None or self.shape <= 0.0:
                raise DomainError("GPD needs shape > 0")
        elif self.kind == "student_t":
            if self.df is None or self.df <= 2.0:
                raise DomainError("Student-t needs df > 2 (finite variance)")
        elif self.kind == "garch":
            a, b, w = self.garch_alpha1, self.garch_beta1, self.garch_omega
            if a is None or b is None or w is None:
                raise DomainError("GARCH needs alpha1, beta1 and omega")
            if a < 0.0 or b < 0.0 or w < 0.0:
                raise DomainError("GARCH coefficients must be nonnegative")
            if a + b >= 1.0:
                raise StationarityError(
                    f"alpha1 + beta1 = {a + b} >= 1 is not covariance stationary")
            if w == 0.0:
                warnings.warn(
                    "GARCH with omega = 0 has no stationary variance; the "
                    "simulated path contracts toward zero", stacklevel=3)

    @classmethod
    def gpd(cls, shape: float = 1.0 / 3.0, scale: float = 1.0,
            location: float = 0.0) -> "ModelSpec":
        return cls(kind="gpd", shape=shape, scale=scale, location=location)

    @classmethod
    def student_t(cls, df: float = 4.0, scale: float = 1.0,
                  location: float = 0.0) -> "ModelSpec":
        return cls(kind="student_t", df=df, scale=scale, location=location)

    @classmethod
    def normal(cls, location: float = 0.0, scale: float = 1.0) -> "ModelSpec":
        return cls(kind="normal", scale=scale, location=location)

    @classmethod
    def garch(cls, alpha1: float = 0.061, beta1: float = 0.932,
              omega: float = 0.007) -> "ModelSpec":
        """Default omega gives unit unconditional variance: w/(1-a-b) = 1."""
        return cls(kind="garch", garch_alpha1=alpha1, garch_beta1=beta1,
                   garch_omega=omega)

    def label(self) -> str:
        if self.kind == "gpd":
            return f"gpd:{self.shape:g}"
        if self.kind == "student_t":
            return f"t:{self.df:g}"
        if self.kind == "garch":
            return (f"garch:{self.garch_alpha1:g},{self.garch_beta1:g},"
                    f"{self.garch_omega:g}")
        return "normal"

    def to_config(self) -> str:
        """Plain-text key=value form used by the CLI."""
        pairs = [("kind", self.kind)]
        for name in ("shape", "df", "garch_alpha1", "garch_beta1",
                     "garch_omega"):
            value = getattr(self, name)
            if value is not None:
                pairs.append((name, f"{value:.17g}"))
        pairs += [("scale", f"{self.scale:.17g}"),
                  ("location", f"{self.location:.17g}")]
        return "\n".join(f"{k}={v}" for k, v in pairs)

    @classmethod
    def from_config(cls, text: str) -> "ModelSpec":
        fields: dict[str, object] = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            key = key.strip()
            fields[key] = value.strip() if key == "kind" else float(value)
        return cls(**fields)  # type: ignore[arg-type]


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """One replicate: immutable values plus the substream that made them."""

    values: np.ndarray
    seed_path: tuple[int, int]
    model: ModelSpec

    def __post_init__(self):
        self.values.setflags(write=False)

    @property
    def n(self) -> int:
        return int(self.values.size)


def _check_levels(u) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    if u.size and (u.min() <= 0.0 or u.max() >= 1.0):
        raise DomainError("quantile level must lie in (0, 1)")
    return u


def quantile(model: ModelSpec, u):
    """Lower quantile F^{-1}(u) of the model's marginal distribution.

    Raises:
        AnalyticQuantileUnavailable: for GARCH, whose marginal law has no
            closed form; use the large-sample oracle instead.
    """
    scalar = np.isscalar(u)
    u = _check_levels(u)
    if model.kind == "normal":
        out = model.location + model.scale * ndtri(u)
    elif model.kind == "gpd":
        xi = model.shape
        out = model.location + model.scale * ((1.0 - u) ** -xi - 1.0) / xi
    elif model.kind == "student_t":
        out = model.location + model.scale * _student_t.ppf(u, model.df)
    else:
        raise AnalyticQuantileUnavailable(
            "GARCH marginal quantile has no closed form")
    return float(out) if scalar else out


def cdf(model: ModelSpec, x):
    """Marginal CDF for the three i.i.d. models."""
    scalar = np.isscalar(x)
    z = (np.asarray(x, dtype=np.float64) - model.location) / model.scale
    if model.kind == "normal":
        out = ndtr(z)
    elif model.kind == "gpd":
        xi = model.shape
        out = 1.0 - np.maximum(1.0 + xi * z, 0.0) ** (-1.0 / xi)
    elif model.kind == "student_t":
        out = _student_t.cdf(z, model.df)
    else:
        raise AnalyticQuantileUnavailable("GARCH marginal CDF has no closed form")
    return float(out) if scalar else out


def loss_quantile(model: ModelSpec, u, draws_as: str = "losses"):
    """Quantile of the loss distribution implied by the draw orientation."""
    if draws_as == "losses":
        return quantile(model, u)
    if draws_as == "returns":
        u = np.asarray(u, dtype=np.float64)
        out = -quantile(model, 1.0 - u)
        return float(out) if out.ndim == 0 else out
    raise DomainError(f"draws_as must be 'losses' or 'returns', got {draws_as!r}")


def sample(model: ModelSpec, n: int, seed_path: tuple[int, int]) -> SampleBatch:
    """i.i.d. draws via inverse-CDF of Philox uniforms (models i-iii)."""
    if n < 1:
        raise DomainError("n must be >= 1")
    if model.kind == "garch":
        raise AnalyticQuantileUnavailable(
            "GARCH is a path model; use simulate_garch")
    rng = substream(*seed_path)
    values = quantile(model, rng.random(n))
    return SampleBatch(values=np.asarray(values), seed_path=tuple(seed_path),
                       model=model)


def _garch_initial_variance(model: ModelSpec) -> float:
    w = model.garch_omega
    persistence = 1.0 - model.garch_alpha1 - model.garch_beta1
    return w / persistence if w > 0.0 else 1.0


def simulate_garch(model: ModelSpec, n: int, burn_in: int = 500,
                   seed_path: tuple[int, int] = (0, 0)) -> SampleBatch:
    """Last ``n`` values of a burnt-in GARCH(1,1) recursion.

    The squared volatility starts at the unconditional variance
    omega/(1 - alpha1 - beta1) (at 1.0 when omega = 0, where no stationary
    variance exists).
    """
    if model.kind != "garch":
        raise DomainError("simulate_garch needs a GARCH model")
    if n < 1 or burn_in < 0:
        raise DomainError("need n >= 1 and burn_in >= 0")
    rng = substream(*seed_path)
    z = rng.standard_normal(n + burn_in)
    path = _accel.garch_path(z, model.garch_omega, model.garch_alpha1,
                             model.garch_beta1, _garch_initial_variance(model))
    return SampleBatch(values=np.ascontiguousarray(path[burn_in:]),
                       seed_path=tuple(seed_path), model=model)


# cache of large-sample GARCH oracles, keyed by every input that matters
_GARCH_ORACLE_CACHE: dict[tuple, float] = {}


def true_srm(model: ModelSpec, spectrum: RiskSpectrum, tol: float = 1e-9, *,
             draws_as: str = "losses", garch_n: int = 1_000_000,
             garch_burn_in: int = 10_000,
             garch_seed_path: tuple[int, int] = (190_501, 0),
             garch_panels: int = 512) -> float:
    """Ground-truth spectral risk measure (loss side).

    For the analytic models this is the weight-quantile integral refined by
    mesh doubling until successive values differ by less than ``tol``.  For
    GARCH it is a smoothed-CDF estimate on one burnt-in sample of
    ``garch_n`` draws: an approximate oracle, cached per seed path.
    """
    if tol <= 0.0:
        raise DomainError("tol must be positive")
    if model.kind != "garch":
        value, _ = integrate_unit_interval(
            lambda u: spectrum.phi(u) * loss_quantile(model, u, draws_as),
            breaks=spectrum.breakpoints(), tol=tol)
        return value

    key = (model, spectrum, draws_as, garch_n, garch_burn_in,
           tuple(garch_seed_path), garch_panels)
    if key not in _GARCH_ORACLE_CACHE:
        batch = simulate_garch(model, garch_n, garch_burn_in, garch_seed_path)
        draws = batch.values if draws_as == "losses" else -batch.values
        losses = np.sort(draws)
        b = bandwidth_swanepoel(losses)
        value, ok = _accel.srm_smoothed(losses, b, _accel.K_GAUSSIAN,
                                        spectrum.code, spectrum.param, 1e-6,
                                        garch_panels, 1e-10, 200)
        check, ok2 = _accel.srm_smoothed(losses, b, _accel.K_GAUSSIAN,
                                         spectrum.code, spectrum.param, 1e-6,
                                         2 * garch_panels, 1e-10, 200)
        if not (ok and ok2):
            raise DomainError("oracle quantile inversion failed")
        if abs(check - value) > 1e-6 * max(abs(check), 1e-12):
            warnings.warn("GARCH oracle quadrature moved on panel doubling",
                          stacklevel=2)
        _GARCH_ORACLE_CACHE[key] = check
    return _GARCH_ORACLE_CACHE[key]
