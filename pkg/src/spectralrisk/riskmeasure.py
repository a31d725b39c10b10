"""Risk spectra, distortion functions, and the two risk-measure estimators.

Orientation convention used throughout the package: all spectra weight the
quantile function of the LOSS distribution (losses L = -returns), the weight
density is nondecreasing in u (heavier weight on larger losses), and the
cumulative weight D(u) = integral_0^u phi runs from 0 to 1.  Point estimates
are loss-side (nonnegative for a left-skewed return distribution); reports
carry a ``sign`` field, and ``sign="return"`` negates the estimate for the
presentation common in return-units tables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import ndtri

from . import _accel
from .errors import DomainError, OracleConvergenceError
from .kernel import KernelCdf, KernelEstimatorConfig

__all__ = [
    "RiskSpectrum",
    "DistortionFunction",
    "LStatWeights",
    "EstimateReport",
    "AsymptoticSpec",
    "AdmissibilityReport",
    "parse_spectrum",
    "lstat_weights",
    "empirical_srm",
    "kernel_srm",
    "asymptotic_variance",
    "clt_interval",
    "validate_admissible",
    "integrate_unit_interval",
]

_SPECTRUM_CODES = {
    "exponential": _accel.S_EXPONENTIAL,
    "power_low": _accel.S_POWER_LOW,
    "power_high": _accel.S_POWER_HIGH,
    "expected_shortfall": _accel.S_EXPECTED_SHORTFALL,
}

_PARSE_TAGS = {
    "exp": "exponential",
    "powlow": "power_low",
    "powhigh": "power_high",
    "es": "expected_shortfall",
}
_LABEL_TAGS = {v: k for k, v in _PARSE_TAGS.items()}

# largest admissible exponential risk aversion; exp(beta) overflows beyond
_MAX_BETA = 700.0

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class RiskSpectrum:
    """A weight density phi on (0,1) plus its single parameter.

    Kinds and loss-quantile-convention densities:

    * ``exponential`` (param beta > 0): beta*exp(-beta*(1-u)) / (1-exp(-beta))
    * ``power_low`` (param 0 < gamma < 1): gamma*(1-u)^(gamma-1)
    * ``power_high`` (param gamma > 1): gamma*u^(gamma-1)
    * ``expected_shortfall`` (param 0 < p < 1): (1/p) * 1[u >= 1-p]

    All are nonnegative, integrate to one, and are nondecreasing, so the
    induced cumulative weight is convex and the measure is coherent.
    """

    kind: str
    param: float

    def __post_init__(self):
        if self.kind not in _SPECTRUM_CODES:
            raise DomainError(f"unknown spectrum kind {self.kind!r}")
        p = self.param
        if self.kind == "exponential" and not 0.0 < p < _MAX_BETA:
            raise DomainError(f"exponential beta must lie in (0, {_MAX_BETA:.0f})")
        if self.kind == "power_low" and not 0.0 < p < 1.0:
            raise DomainError("power_low gamma must lie in (0, 1)")
        if self.kind == "power_high" and p <= 1.0:
            raise DomainError("power_high gamma must exceed 1")
        if self.kind == "expected_shortfall" and not 0.0 < p < 1.0:
            raise DomainError("expected-shortfall level must lie in (0, 1)")

    @classmethod
    def exponential(cls, beta: float) -> "RiskSpectrum":
        return cls("exponential", float(beta))

    @classmethod
    def power_low(cls, gamma: float) -> "RiskSpectrum":
        return cls("power_low", float(gamma))

    @classmethod
    def power_high(cls, gamma: float) -> "RiskSpectrum":
        return cls("power_high", float(gamma))

    @classmethod
    def expected_shortfall(cls, p: float) -> "RiskSpectrum":
        return cls("expected_shortfall", float(p))

    @property
    def code(self) -> int:
        return _SPECTRUM_CODES[self.kind]

    def label(self) -> str:
        return f"{_LABEL_TAGS[self.kind]}:{self.param:g}"

    def breakpoints(self) -> tuple[float, ...]:
        """Interior points of (0,1) where phi is discontinuous."""
        if self.kind == "expected_shortfall":
            return (1.0 - self.param,)
        return ()

    def phi(self, u):
        """Weight density at quantile level(s) u, loss convention."""
        u = np.asarray(u, dtype=np.float64)
        p = self.param
        if self.kind == "exponential":
            # log-stable: exp(-beta*(1-u)), never exp(beta*u)/exp(beta)
            out = p * np.exp(-p * (1.0 - u)) / (1.0 - math.exp(-p))
        elif self.kind == "power_low":
            out = p * (1.0 - u) ** (p - 1.0)
        elif self.kind == "power_high":
            out = p * u ** (p - 1.0)
        else:
            out = np.where(u >= 1.0 - p, 1.0 / p, 0.0)
        return out if out.ndim else float(out)


def parse_spectrum(text: str) -> RiskSpectrum:
    """Parse CLI syntax ``exp:B``, ``powlow:G``, ``powhigh:G``, ``es:P``."""
    try:
        tag, raw = text.split(":", 1)
        value = float(raw)
    except ValueError as exc:
        raise DomainError(f"cannot parse spectrum {text!r}") from exc
    kind = _PARSE_TAGS.get(tag.strip().lower())
    if kind is None:
        raise DomainError(f"unknown spectrum tag {tag!r}")
    return RiskSpectrum(kind, value)


@dataclass(frozen=True)
class DistortionFunction:
    """Cumulative weight D(u) = integral_0^u phi(s) ds, evaluated in closed
    form per spectrum kind.  D(0) = 0, D(1) = 1, D nondecreasing and convex.
    """

    spectrum: RiskSpectrum

    def __call__(self, u):
        u = np.asarray(u, dtype=np.float64)
        if np.any((u < 0.0) | (u > 1.0)):
            raise DomainError("distortion argument must lie in [0, 1]")
        p = self.spectrum.param
        kind = self.spectrum.kind
        if kind == "exponential":
            em = math.exp(-p)
            out = (np.exp(-p * (1.0 - u)) - em) / (1.0 - em)
        elif kind == "power_low":
            out = 1.0 - (1.0 - u) ** p
        elif kind == "power_high":
            out = u**p
        else:
            out = np.clip((u - (1.0 - p)) / p, 0.0, 1.0)
        return out if out.ndim else float(out)


@dataclass(frozen=True, eq=False)
class LStatWeights:
    """Order-statistic weights c_i = D(i/n) - D((i-1)/n)."""

    n: int
    weights: np.ndarray
    distortion: DistortionFunction


def lstat_weights(distortion: DistortionFunction, n: int) -> LStatWeights:
    if n < 1:
        raise DomainError("n must be >= 1")
    grid = np.arange(n + 1, dtype=np.float64) / n
    c = np.diff(distortion(grid))
    np.maximum(c, 0.0, out=c)  # guard roundoff; D is nondecreasing
    return LStatWeights(n=n, weights=c, distortion=distortion)


@dataclass
class EstimateReport:
    """One point estimate with optional uncertainty and full provenance."""

    estimator: str
    point: float
    n: int
    spectrum: RiskSpectrum
    sd: Optional[float] = None
    ci: Optional[tuple[float, float, float]] = None
    bandwidth: Optional[float] = None
    sign: str = "loss"
    units: str = "raw"
    warnings: tuple[str, ...] = ()
    provenance: dict = field(default_factory=dict)


def _oriented(point_loss: float, sign: str) -> float:
    if sign == "loss":
        return point_loss
    if sign == "return":
        return -point_loss
    raise DomainError(f"sign must be 'loss' or 'return', got {sign!r}")


def empirical_srm(data, spectrum: RiskSpectrum, *, sign: str = "loss") -> EstimateReport:
    """L-statistic estimate: sorted losses weighted by distortion increments."""
    losses = np.sort(-np.asarray(data, dtype=np.float64))
    if losses.size < 2:
        raise DomainError("need at least two observations")
    w = lstat_weights(DistortionFunction(spectrum), losses.size)
    point_loss = float(w.weights @ losses)
    return EstimateReport(estimator="empirical", point=_oriented(point_loss, sign),
                          n=losses.size, spectrum=spectrum, sign=sign)


def _quad_segments(eps: float, breaks: tuple[float, ...]) -> list[tuple[float, float]]:
    knots = [eps] + [x for x in breaks if eps < x < 1.0 - eps] + [1.0 - eps]
    return list(zip(knots[:-1], knots[1:]))


def _srm_smoothed_inverse(cdf: KernelCdf, spectrum: RiskSpectrum, eps: float,
                          panels: int, tol: float, max_iter: int) -> float:
    """Gauss-Legendre quadrature of F^{-1}(u) phi(u) over [eps, 1-eps];
    every node goes through the bisection inverse.

    Panel widths are graded quadratically toward the clipped endpoints,
    where the inverse has a steep derivative (1 over a vanishing density).
    """
    segments = _quad_segments(eps, spectrum.breakpoints())
    total_len = (1.0 - eps) - eps
    nodes = []
    weights = []
    for u0, u1 in segments:
        m = max(1, int(round(panels * (u1 - u0) / total_len)))
        s = np.arange(m + 1, dtype=np.float64) / m
        if u0 == eps and u1 == 1.0 - eps:
            s = s * s * (3.0 - 2.0 * s)
        elif u0 == eps:
            s = s * s
        elif u1 == 1.0 - eps:
            s = 1.0 - (1.0 - s) ** 2
        edges = u0 + (u1 - u0) * s
        half = 0.5 * np.diff(edges)
        centers = edges[:-1] + half
        nodes.append((centers[:, None] + half[:, None] * _GL_NODES[None, :]).ravel())
        weights.append((half[:, None] * _GL_WEIGHTS[None, :]).ravel())
    u = np.concatenate(nodes)
    w = np.concatenate(weights)
    q = cdf.quantile(u, tol=tol, max_iter=max_iter)
    return float(np.sum(w * spectrum.phi(u) * q))


def _srm_smoothed_direct(cdf: KernelCdf, spectrum: RiskSpectrum, eps: float,
                         panels: int, tol: float, max_iter: int) -> float:
    """Same integral through the substitution u = F(x) and integration by
    parts; needs only CDF evaluations, so it is the fast path."""
    value, ok = _accel.srm_smoothed(cdf.data, cdf.b, cdf.kind, spectrum.code,
                                    spectrum.param, eps, panels, tol, max_iter)
    if not ok:
        from .errors import InversionError

        raise InversionError(eps, (math.nan, math.nan))
    return value


def kernel_srm(data, spectrum: RiskSpectrum,
               config: KernelEstimatorConfig | None = None, *,
               sign: str = "loss", method: str = "inverse") -> EstimateReport:
    """Smoothed-CDF estimate of the spectral risk measure.

    ``method="inverse"`` evaluates F^{-1} at each quadrature node (the
    defining form).  ``method="direct"`` integrates in x after the exact
    change of variables u = F(x); it agrees with the inverse form to within
    quadrature tolerance and is used by the Monte-Carlo engines.  When
    ``config.check_convergence`` is set, the panel count is doubled once and
    a disagreement beyond ``convergence_rtol`` is recorded as a warning.
    """
    config = config or KernelEstimatorConfig()
    losses = np.sort(-np.asarray(data, dtype=np.float64))
    if losses.size < 2:
        raise DomainError("need at least two observations")
    b = config.resolve_bandwidth(losses)
    cdf = KernelCdf(data=losses, b=b, kernel=config.kernel)
    if method == "inverse":
        evaluate = _srm_smoothed_inverse
    elif method == "direct":
        evaluate = _srm_smoothed_direct
    else:
        raise DomainError(f"unknown method {method!r}")

    point_loss = evaluate(cdf, spectrum, config.quad_eps, config.quad_panels,
                          config.inversion_tol, config.inversion_max_iter)
    warnings: tuple[str, ...] = ()
    if config.check_convergence:
        refined = evaluate(cdf, spectrum, config.quad_eps,
                           2 * config.quad_panels, config.inversion_tol,
                           config.inversion_max_iter)
        gap = abs(refined - point_loss) / max(abs(refined), 1e-12)
        if gap > config.convergence_rtol:
            warnings = (f"quadrature unconverged: relative change {gap:.3e} "
                        f"on panel doubling",)
        point_loss = refined

    return EstimateReport(estimator="kernel", point=_oriented(point_loss, sign),
                          n=losses.size, spectrum=spectrum, bandwidth=b,
                          sign=sign, warnings=warnings)


@dataclass
class AsymptoticSpec:
    """Inputs of the limit-variance double integral.

    ``weight`` is the spectrum density on (0,1); ``quantile`` maps t to the
    loss-quantile transform g(t).  ``sigma2``, ``mu`` and ``refinement``
    (coarse value, refined value) are output slots.
    """

    weight: Callable[[np.ndarray], np.ndarray]
    quantile: Callable[[np.ndarray], np.ndarray]
    sigma2: Optional[float] = None
    mu: Optional[float] = None
    refinement: Optional[tuple[float, float]] = None


def _sigma2_once(spec: AsymptoticSpec, grid: int, eps: float) -> float:
    edges = np.linspace(eps, 1.0 - eps, grid + 1)
    g = np.asarray(spec.quantile(edges), dtype=np.float64)
    if not np.isfinite(g).all():
        raise DomainError("quantile transform not finite inside the clipped range")
    mids = 0.5 * (edges[:-1] + edges[1:])
    w = np.asarray(spec.weight(mids), dtype=np.float64) * np.diff(g)
    bridge = np.minimum(mids[:, None], mids[None, :]) - np.outer(mids, mids)
    return float(w @ bridge @ w)


def asymptotic_variance(spec: AsymptoticSpec, grid: int = 800,
                        eps: float = 1e-6) -> float:
    """Brownian-bridge double integral sigma^2 by a midpoint tensor rule.

    Increments of the quantile transform replace differentiation.  The grid
    is doubled once; the refined value is returned and both values land in
    ``spec.refinement`` so their gap can be reported.  Endpoints are clipped
    at ``eps``; a non-finite transform inside the clip raises
    ``DomainError``.
    """
    if grid < 2:
        raise DomainError("grid must be >= 2")
    coarse = _sigma2_once(spec, grid, eps)
    refined = _sigma2_once(spec, 2 * grid, eps)
    value = max(refined, 0.0)
    spec.sigma2 = value
    spec.refinement = (coarse, refined)
    edges = np.linspace(eps, 1.0 - eps, 2 * grid + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    step = edges[1] - edges[0]
    spec.mu = float(np.sum(spec.weight(mids) * spec.quantile(mids)) * step)
    return value


def clt_interval(point: float, sigma2: float, n: int, level: float) -> tuple[float, float]:
    """Normal-limit interval point +/- z_{(1+level)/2} * sqrt(sigma2 / n)."""
    if sigma2 < 0.0:
        raise DomainError("sigma2 must be nonnegative")
    if n < 1:
        raise DomainError("n must be >= 1")
    if not 0.0 < level < 1.0:
        raise DomainError("level must lie in (0, 1)")
    half = float(ndtri(0.5 * (1.0 + level))) * math.sqrt(sigma2 / n)
    return point - half, point + half


@dataclass(frozen=True)
class AdmissibilityReport:
    nonnegative: bool
    integral_one: bool
    nondecreasing: bool
    integral_value: float

    @property
    def passed(self) -> bool:
        return self.nonnegative and self.integral_one and self.nondecreasing


def validate_admissible(spectrum: RiskSpectrum, grid_size: int = 10_000,
                        tol: float = 1e-8) -> AdmissibilityReport:
    """Numerically check phi >= 0, integral one, and monotonicity."""
    u = np.arange(1, grid_size + 1, dtype=np.float64) / (grid_size + 1)
    vals = spectrum.phi(u)
    nonneg = bool(np.all(vals >= -1e-12))
    monotone = bool(np.all(np.diff(vals) >= -1e-10 * max(1.0, np.abs(vals).max())))
    integral, _ = integrate_unit_interval(spectrum.phi, spectrum.breakpoints(),
                                          tol=min(tol, 1e-9) / 10.0)
    return AdmissibilityReport(nonnegative=nonneg,
                               integral_one=bool(abs(integral - 1.0) <= tol),
                               nondecreasing=monotone,
                               integral_value=integral)


def integrate_unit_interval(fn, breaks: tuple[float, ...] = (), tol: float = 1e-9,
                            start_panels: int = 8, max_panels: int = 4096):
    """Integral of ``fn`` over (0,1) by mesh-doubling composite quadrature.

    The interval is split at ``breaks`` and at 1/2; the two endpoint-touching
    segments are mapped through u = a*v^4 (mirrored at 1) so integrable
    endpoint singularities become regular.  Panels double until successive
    values differ by less than ``tol``.

    Returns:
        (value, panels) where ``panels`` achieved the tolerance.

    Raises:
        OracleConvergenceError: refinement did not settle below ``tol``.
    """
    if tol <= 0.0:
        raise DomainError("tol must be positive")
    knots = sorted({0.0, 0.5, 1.0} | {b for b in breaks if 0.0 < b < 1.0})
    segments = list(zip(knots[:-1], knots[1:]))

    def evaluate(m: int) -> float:
        total = 0.0
        for u0, u1 in segments:
            h = 1.0 / m
            centers = h * (np.arange(m) + 0.5)
            v = (centers[:, None] + 0.5 * h * _GL_NODES[None, :]).ravel()
            w = np.broadcast_to(0.5 * h * _GL_WEIGHTS, (m, 8)).ravel()
            if u0 == 0.0:
                u = u1 * v**4
                jac = u1 * 4.0 * v**3
            elif u1 == 1.0:
                u = 1.0 - (1.0 - u0) * v**4
                jac = (1.0 - u0) * 4.0 * v**3
            else:
                u = u0 + (u1 - u0) * v
                jac = np.full(v.size, u1 - u0)
            total += float(np.sum(w * jac * np.asarray(fn(u), dtype=np.float64)))
        return total

    previous = evaluate(start_panels)
    m = 2 * start_panels
    while m <= max_panels:
        current = evaluate(m)
        if abs(current - previous) < tol:
            return current, m
        previous = current
        m *= 2
    raise OracleConvergenceError(
        f"quadrature did not converge below {tol} by {max_panels} panels")
