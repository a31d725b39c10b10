"""Reproducible experiment engines.

Every engine is a pure function of its config, including the master seed:
replicate j draws from the Philox substream (master_seed, j), heavy math runs
in per-replicate slots, and aggregation uses numpy's pairwise summation, so
reruns are bit-identical no matter how many worker threads execute.
"""

from __future__ import annotations

import math
import warnings as _warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.stats import kstest

from . import _accel
from .distributions import ModelSpec, loss_quantile, true_srm
from .errors import DomainError
from .kernel import (SWANEPOEL_CONSTANT, SWANEPOEL_SCALE_EXPONENT,
                     EndpointWeight, KernelCdf, KernelEstimatorConfig,
                     nearly_linear_bounds_check, weighted_sup_distance)
from .provenance import run_stamp
from .riskmeasure import (AsymptoticSpec, DistortionFunction, EstimateReport,
                          RiskSpectrum, asymptotic_variance, kernel_srm,
                          lstat_weights)
from .rng import substream

__all__ = [
    "BandwidthRule",
    "MseExperimentConfig",
    "MseRatioReport",
    "BootstrapConfig",
    "DecayReport",
    "NormalityReport",
    "BoundsSweepReport",
    "mse_ratio_experiment",
    "bootstrap_distribution",
    "consistency_sweep",
    "clt_check",
    "theory_check_theorem1",
    "theory_check_theorem2",
    "prescan_lambda",
    "table1_grid",
    "Table1Report",
]


@dataclass(frozen=True)
class BandwidthRule:
    """b = constant * scale^scale_exponent * n^n_exponent, scale = min(S, IQR/1.349).

    The default is the plug-in rule as printed.  ``cube_root`` is the
    scale-free rule b = n^(-1/3) used by the theory checks, and ``clt`` keeps
    the plug-in constant but decays at n^(-1/3), inside the bandwidth range
    required by the normality limit (the n^(-1/7) decay is too slow for the
    root-n limit; its smoothing bias does not vanish after scaling).
    """

    constant: float = SWANEPOEL_CONSTANT
    scale_exponent: float = SWANEPOEL_SCALE_EXPONENT
    n_exponent: float = -1.0 / 7.0

    @classmethod
    def swanepoel(cls) -> "BandwidthRule":
        return cls()

    @classmethod
    def cube_root(cls) -> "BandwidthRule":
        return cls(constant=1.0, scale_exponent=0.0, n_exponent=-1.0 / 3.0)

    @classmethod
    def clt(cls) -> "BandwidthRule":
        return cls(n_exponent=-1.0 / 3.0)

    @classmethod
    def fixed(cls, b: float) -> "BandwidthRule":
        if b <= 0.0:
            raise DomainError("bandwidth must be positive")
        return cls(constant=b, scale_exponent=0.0, n_exponent=0.0)

    def resolve(self, sorted_losses: np.ndarray) -> float:
        if self.scale_exponent == 0.0:
            sigma = 1.0
        else:
            s = float(np.std(sorted_losses, ddof=1))
            q1, q3 = np.percentile(sorted_losses, [25.0, 75.0])
            sigma = min(s, (q3 - q1) / 1.349)
        return (self.constant * sigma**self.scale_exponent
                * float(sorted_losses.size) ** self.n_exponent)


@dataclass(frozen=True)
class QuadratureSettings:
    """Quadrature used inside the batched engines (validated per run by a
    panel-doubling probe on the first replicate)."""

    eps: float = 1e-6
    panels: int = 64
    inversion_tol: float = 1e-10
    inversion_max_iter: int = 200


_DEFAULT_QUAD = QuadratureSettings()


def _draw_losses(model: ModelSpec, n: int, replicates: int, master_seed: int,
                 draws_as: str, burn_in: int = 500) -> np.ndarray:
    """Replicate-by-row loss samples, one substream per row."""
    if draws_as not in ("losses", "returns"):
        raise DomainError(f"draws_as must be 'losses' or 'returns', got {draws_as!r}")
    rows = np.empty((replicates, n), dtype=np.float64)
    if model.kind == "garch":
        w = model.garch_omega
        s2 = (w / (1.0 - model.garch_alpha1 - model.garch_beta1)
              if w > 0.0 else 1.0)
        for j in range(replicates):
            z = substream(master_seed, j).standard_normal(n + burn_in)
            rows[j] = _accel.garch_path(z, w, model.garch_alpha1,
                                        model.garch_beta1, s2)[burn_in:]
    else:
        from .distributions import quantile

        for j in range(replicates):
            rows[j] = quantile(model, substream(master_seed, j).random(n))
    if draws_as == "returns":
        np.negative(rows, out=rows)
    return rows


def _estimate_batch(losses: np.ndarray, spectrum: RiskSpectrum,
                    rule: BandwidthRule, quad: QuadratureSettings):
    """(empirical, smoothed, bandwidths) for every row, via the hot kernels."""
    n = losses.shape[1]
    cni = lstat_weights(DistortionFunction(spectrum), n).weights
    emp, ker, bws = _accel.mse_pair_batch(
        np.ascontiguousarray(losses), cni, spectrum.code, spectrum.param,
        quad.eps, quad.panels, quad.inversion_tol, quad.inversion_max_iter,
        rule.constant, rule.scale_exponent, rule.n_exponent)
    if np.isnan(ker).any():
        raise DomainError("smoothed estimator failed to invert on some replicate")
    return emp, ker, bws


def _probe_quadrature(losses_row: np.ndarray, spectrum: RiskSpectrum,
                      rule: BandwidthRule, quad: QuadratureSettings) -> tuple[str, ...]:
    """Panel-doubling check of the batched quadrature on one replicate."""
    row = np.sort(losses_row)
    b = rule.resolve(row)
    v1, ok1 = _accel.srm_smoothed(row, b, _accel.K_GAUSSIAN, spectrum.code,
                                  spectrum.param, quad.eps, quad.panels,
                                  quad.inversion_tol, quad.inversion_max_iter)
    v2, ok2 = _accel.srm_smoothed(row, b, _accel.K_GAUSSIAN, spectrum.code,
                                  spectrum.param, quad.eps, 2 * quad.panels,
                                  quad.inversion_tol, quad.inversion_max_iter)
    if not (ok1 and ok2):
        return ("quadrature probe failed to invert",)
    gap = abs(v2 - v1) / max(abs(v2), 1e-12)
    if gap > 1e-6:
        return (f"quadrature probe moved {gap:.2e} on panel doubling",)
    return ()


@dataclass(frozen=True)
class MseExperimentConfig:
    """One cell of the MSE comparison study."""

    model: ModelSpec
    spectrum: RiskSpectrum
    n: int
    replicates: int = 1000
    master_seed: int = 20090102
    draws_as: str = "losses"
    bandwidth_rule: BandwidthRule = field(default_factory=BandwidthRule.swanepoel)
    quadrature: QuadratureSettings = field(default_factory=QuadratureSettings)
    truth: Optional[float] = None
    garch_burn_in: int = 500

    def __post_init__(self):
        if self.replicates < 2:
            raise DomainError("need at least two replicates")
        if self.n < 2:
            raise DomainError("need n >= 2")
        if self.truth is not None and not math.isfinite(self.truth):
            raise DomainError("truth must be finite")


@dataclass
class MseRatioReport:
    model: str
    spectrum: str
    n: int
    replicates: int
    master_seed: int
    truth: float
    truth_source: str
    mse_empirical: float
    mse_kernel: float
    ratio: float
    ratio_se: float
    mean_bandwidth: float
    warnings: tuple[str, ...] = ()
    provenance: dict = field(default_factory=dict)


def _ratio_and_se(sq_emp: np.ndarray, sq_ker: np.ndarray) -> tuple[float, float, float, float]:
    mse1 = float(np.mean(sq_emp))
    mse2 = float(np.mean(sq_ker))
    ratio = mse2 / mse1
    B = sq_emp.size
    va = float(np.var(sq_emp, ddof=1))
    vb = float(np.var(sq_ker, ddof=1))
    cov = float(np.cov(sq_emp, sq_ker, ddof=1)[0, 1])
    var_ratio = (vb / mse1**2 + mse2**2 * va / mse1**4
                 - 2.0 * mse2 * cov / mse1**3) / B
    return mse1, mse2, ratio, math.sqrt(max(var_ratio, 0.0))


def mse_ratio_experiment(cfg: MseExperimentConfig,
                         estimator_pair: Optional[tuple[Callable, Callable]] = None
                         ) -> MseRatioReport:
    """Monte-Carlo MSE of the smoothed estimator over that of the L-statistic.

    Draws ``replicates`` samples of size n, computes both estimators per
    replicate (bandwidth re-resolved from each sample), and reports
    MSE(smoothed)/MSE(empirical) around the ground truth, with a delta-method
    standard error over replicates.

    ``estimator_pair`` is a test hook: two callables mapping a loss sample to
    an estimate, replacing (empirical, smoothed).
    """
    if cfg.truth is not None:
        theta, truth_source = cfg.truth, "supplied"
    else:
        theta = true_srm(cfg.model, cfg.spectrum, draws_as=cfg.draws_as)
        truth_source = ("large-sample-smoothed-oracle"
                        if cfg.model.kind == "garch" else "quadrature")
    losses = _draw_losses(cfg.model, cfg.n, cfg.replicates, cfg.master_seed,
                          cfg.draws_as, cfg.garch_burn_in)
    warn: tuple[str, ...] = ()
    if estimator_pair is None:
        warn = _probe_quadrature(losses[0], cfg.spectrum, cfg.bandwidth_rule,
                                 cfg.quadrature)
        emp, ker, bws = _estimate_batch(losses, cfg.spectrum,
                                        cfg.bandwidth_rule, cfg.quadrature)
    else:
        first, second = estimator_pair
        emp = np.array([first(row) for row in losses])
        ker = np.array([second(row) for row in losses])
        bws = np.full(cfg.replicates, math.nan)
    mse1, mse2, ratio, se = _ratio_and_se((emp - theta) ** 2, (ker - theta) ** 2)
    settings = {
        "model": cfg.model.label(), "spectrum": cfg.spectrum.label(),
        "n": cfg.n, "replicates": cfg.replicates, "seed": cfg.master_seed,
        "draws_as": cfg.draws_as, "bandwidth_rule": cfg.bandwidth_rule,
        "quadrature": cfg.quadrature,
    }
    return MseRatioReport(
        model=cfg.model.label(), spectrum=cfg.spectrum.label(), n=cfg.n,
        replicates=cfg.replicates, master_seed=cfg.master_seed,
        truth=theta, truth_source=truth_source, mse_empirical=mse1,
        mse_kernel=mse2, ratio=ratio, ratio_se=se,
        mean_bandwidth=float(np.mean(bws)), warnings=warn,
        provenance=run_stamp(settings))


@dataclass(frozen=True)
class BootstrapConfig:
    replicates: int = 10_000
    resample_scheme: str = "iid"
    ci_level: float = 0.90
    master_seed: int = 20090102
    block_length: Optional[int] = None
    quadrature: QuadratureSettings = field(default_factory=QuadratureSettings)
    bandwidth_rule: BandwidthRule = field(default_factory=BandwidthRule.swanepoel)

    def __post_init__(self):
        if self.replicates < 100:
            raise DomainError("need at least 100 bootstrap replicates")
        if not 0.0 < self.ci_level < 1.0:
            raise DomainError("ci_level must lie in (0, 1)")
        if self.resample_scheme not in ("iid", "block"):
            raise DomainError(f"unknown resample scheme {self.resample_scheme!r}")


def _resample_indices(cfg: BootstrapConfig, n: int) -> np.ndarray:
    idx = np.empty((cfg.replicates, n), dtype=np.int32)
    if cfg.resample_scheme == "iid":
        for j in range(cfg.replicates):
            idx[j] = substream(cfg.master_seed, j).integers(0, n, size=n,
                                                            dtype=np.int32)
        return idx
    length = cfg.block_length or max(1, round(n ** (1.0 / 3.0)))
    nblocks = -(-n // length)
    offsets = np.arange(length, dtype=np.int64)
    for j in range(cfg.replicates):
        starts = substream(cfg.master_seed, j).integers(0, n, size=nblocks)
        idx[j] = ((starts[:, None] + offsets[None, :]) % n).ravel()[:n]
    return idx


def _order_statistic_ci(values: np.ndarray, level: float) -> tuple[float, float]:
    ordered = np.sort(values)
    B = ordered.size
    alpha = 1.0 - level
    lo = ordered[max(0, math.ceil(alpha / 2.0 * B) - 1)]
    hi = ordered[min(B - 1, math.ceil((1.0 - alpha / 2.0) * B) - 1)]
    return float(lo), float(hi)


def bootstrap_distribution(data, spectrum: RiskSpectrum,
                           cfg: BootstrapConfig | None = None, *,
                           sign: str = "loss") -> EstimateReport:
    """Resampling distribution of the smoothed estimator.

    Resamples with replacement, recomputes the bandwidth on every resample,
    reports the sample SD of the replicate estimates and the empirical
    percentile interval (endpoints are order statistics of the replicate
    vector).
    """
    cfg = cfg or BootstrapConfig()
    data = np.asarray(data, dtype=np.float64)
    n = data.size
    if n < 2:
        raise DomainError("need at least two observations")
    report_warnings: tuple[str, ...] = ()
    if n < 30:
        _warnings.warn("bootstrap on fewer than 30 observations is unstable",
                       stacklevel=2)
        report_warnings += ("n < 30",)

    point_config = KernelEstimatorConfig(
        quad_eps=cfg.quadrature.eps, quad_panels=cfg.quadrature.panels,
        inversion_tol=cfg.quadrature.inversion_tol,
        inversion_max_iter=cfg.quadrature.inversion_max_iter)
    point_report = kernel_srm(data, spectrum, point_config, sign="loss",
                              method="direct")
    report_warnings += point_report.warnings

    losses = -data
    idx = _resample_indices(cfg, n)
    values = _accel.bootstrap_batch(
        losses, idx, spectrum.code, spectrum.param, cfg.quadrature.eps,
        cfg.quadrature.panels, cfg.quadrature.inversion_tol,
        cfg.quadrature.inversion_max_iter, cfg.bandwidth_rule.constant,
        cfg.bandwidth_rule.scale_exponent, cfg.bandwidth_rule.n_exponent)
    if np.isnan(values).any():
        raise DomainError("bootstrap estimate failed on some resample")
    sd = float(np.std(values, ddof=1))
    lo, hi = _order_statistic_ci(values, cfg.ci_level)
    point = point_report.point
    if sign == "return":
        point, lo, hi = -point, -hi, -lo
    settings = {
        "spectrum": spectrum.label(), "n": n, "replicates": cfg.replicates,
        "scheme": cfg.resample_scheme, "ci_level": cfg.ci_level,
        "seed": cfg.master_seed, "sign": sign,
    }
    return EstimateReport(
        estimator="kernel", point=point, n=n, spectrum=spectrum, sd=sd,
        ci=(lo, hi, cfg.ci_level), bandwidth=point_report.bandwidth, sign=sign,
        warnings=report_warnings, provenance=run_stamp(settings))


@dataclass
class DecayReport:
    label: str
    n_grid: tuple[int, ...]
    medians: tuple[float, ...]
    seeds: int
    strictly_decreasing: Optional[bool]
    provenance: dict = field(default_factory=dict)


def consistency_sweep(model: ModelSpec, spectrum: RiskSpectrum,
                      n_grid: Sequence[int], seeds: int,
                      master_seed: int = 20090102, *, draws_as: str = "losses",
                      bandwidth_rule: BandwidthRule | None = None,
                      quadrature: QuadratureSettings = _DEFAULT_QUAD) -> DecayReport:
    """Median absolute error of the smoothed estimator along a grid of n."""
    rule = bandwidth_rule or BandwidthRule.swanepoel()
    theta = true_srm(model, spectrum, draws_as=draws_as)
    medians = []
    for pos, n in enumerate(n_grid):
        losses = _draw_losses(model, int(n), seeds,
                              master_seed + 1_000_003 * pos, draws_as)
        _, ker, _ = _estimate_batch(losses, spectrum, rule, quadrature)
        medians.append(float(np.median(np.abs(ker - theta))))
    decreasing = None
    if len(n_grid) > 1:
        decreasing = bool(np.all(np.diff(medians) < 0.0))
    settings = {"model": model.label(), "spectrum": spectrum.label(),
                "n_grid": tuple(int(n) for n in n_grid), "seeds": seeds,
                "seed": master_seed}
    return DecayReport(label="median |estimate - truth|",
                       n_grid=tuple(int(n) for n in n_grid),
                       medians=tuple(medians), seeds=seeds,
                       strictly_decreasing=decreasing,
                       provenance=run_stamp(settings))


@dataclass
class NormalityReport:
    model: str
    spectrum: str
    n: int
    replicates: int
    truth: float
    sigma2: float
    ks_distance: float
    variance_ratio: float
    mean_standardized: float
    mean_bandwidth: float
    provenance: dict = field(default_factory=dict)


def clt_check(model: ModelSpec, spectrum: RiskSpectrum, n: int,
              replicates: int, master_seed: int = 20090102, *,
              draws_as: str = "losses",
              bandwidth_rule: BandwidthRule | None = None,
              variance_grid: int = 800,
              quadrature: QuadratureSettings = _DEFAULT_QUAD) -> NormalityReport:
    """Distributional check of the root-n limit of the smoothed estimator.

    Standardizes root-n * (estimate - truth) by the limit deviation from the
    Brownian-bridge double integral and reports the KS distance to the
    standard normal plus the ratio of the empirical variance of
    root-n * estimate to the limit variance.  The default bandwidth decays at
    n^(-1/3) (see :class:`BandwidthRule`); pass
    ``BandwidthRule.swanepoel()`` to observe the bias the n^(-1/7) decay
    leaves behind.
    """
    if replicates < 2:
        raise DomainError("need at least two replicates")
    if model.kind == "garch":
        raise DomainError("limit-variance check needs an analytic quantile model")
    rule = bandwidth_rule or BandwidthRule.clt()
    theta = true_srm(model, spectrum, draws_as=draws_as)
    aspec = AsymptoticSpec(weight=spectrum.phi,
                           quantile=lambda t: loss_quantile(model, t, draws_as))
    sigma2 = asymptotic_variance(aspec, grid=variance_grid)
    losses = _draw_losses(model, n, replicates, master_seed, draws_as)
    _, ker, bws = _estimate_batch(losses, spectrum, rule, quadrature)
    standardized = math.sqrt(n) * (ker - theta) / math.sqrt(sigma2)
    ks = float(kstest(standardized, "norm").statistic)
    variance_ratio = float(n * np.var(ker, ddof=1) / sigma2)
    settings = {"model": model.label(), "spectrum": spectrum.label(), "n": n,
                "replicates": replicates, "seed": master_seed,
                "bandwidth_rule": rule}
    return NormalityReport(
        model=model.label(), spectrum=spectrum.label(), n=n,
        replicates=replicates, truth=theta, sigma2=sigma2, ks_distance=ks,
        variance_ratio=variance_ratio,
        mean_standardized=float(np.mean(standardized)),
        mean_bandwidth=float(np.mean(bws)), provenance=run_stamp(settings))


def theory_check_theorem1(delta: float, n_grid: Sequence[int], seeds: int,
                          master_seed: int = 20090102, *,
                          variant: str = "half", grid_size: int = 2000,
                          bandwidth_rule: BandwidthRule | None = None) -> DecayReport:
    """Decay of the weighted sup-distance to the uniform CDF across n."""
    weight = EndpointWeight(delta=delta, variant=variant)
    rule = bandwidth_rule or BandwidthRule.cube_root()
    medians = []
    for pos, n in enumerate(n_grid):
        n = int(n)
        dist = np.empty(seeds)
        for s in range(seeds):
            rng = substream(master_seed + 1_000_003 * pos, s)
            data = np.sort(rng.random(n))
            b = rule.resolve(data)
            cdf = KernelCdf(data=data, b=b)
            dist[s] = weighted_sup_distance(cdf, weight, grid_size)
        medians.append(float(np.median(dist)))
    decreasing = None
    if len(n_grid) > 1:
        decreasing = bool(np.all(np.diff(medians) < 0.0))
    settings = {"delta": delta, "variant": variant,
                "n_grid": tuple(int(n) for n in n_grid), "seeds": seeds,
                "seed": master_seed, "grid_size": grid_size}
    return DecayReport(label="median weighted sup-distance",
                       n_grid=tuple(int(n) for n in n_grid),
                       medians=tuple(medians), seeds=seeds,
                       strictly_decreasing=decreasing,
                       provenance=run_stamp(settings))


@dataclass
class BoundsSweepReport:
    n: int
    b: float
    tau1: float
    tau2: float
    lam: float
    seeds: int
    passed_seeds: int
    item_failures: tuple[int, ...]
    provenance: dict = field(default_factory=dict)


def theory_check_theorem2(n: int, b: float, tau1: float, tau2: float,
                          lam: float, seeds: int,
                          master_seed: int = 20090102,
                          grid_size: int = 2000) -> BoundsSweepReport:
    """Envelope-bound check across independent uniform samples."""
    failures = np.zeros(6, dtype=int)
    passed = 0
    for s in range(seeds):
        report = nearly_linear_bounds_check(n, b, tau1, tau2, lam,
                                            (master_seed, s), grid_size)
        if report.all_passed:
            passed += 1
        for item in report.items:
            if not item.passed:
                failures[item.item - 1] += 1
    settings = {"n": n, "b": b, "tau1": tau1, "tau2": tau2, "lam": lam,
                "seeds": seeds, "seed": master_seed, "grid_size": grid_size}
    return BoundsSweepReport(n=n, b=b, tau1=tau1, tau2=tau2, lam=lam,
                             seeds=seeds, passed_seeds=passed,
                             item_failures=tuple(int(x) for x in failures),
                             provenance=run_stamp(settings))


def prescan_lambda(n: int, b: float, tau1: float, tau2: float,
                   candidates: Sequence[float] = (0.25, 0.2, 0.15, 0.1, 0.05,
                                                  0.02, 0.01, 0.005),
                   probe_seeds: int = 8,
                   master_seed: int = 424_243) -> float:
    """Largest candidate lambda passing all six bounds on every probe seed.

    Probes use a seed family disjoint from the evaluation sweep so the scan
    does not peek at the test data.
    """
    for lam in sorted(candidates, reverse=True):
        sweep = theory_check_theorem2(n, b, tau1, tau2, lam, probe_seeds,
                                      master_seed)
        if sweep.passed_seeds == probe_seeds:
            return lam
    raise DomainError("no candidate lambda satisfied the bounds on the probes")


@dataclass
class Table1Report:
    """Grid of MSE-ratio cells, shaped like the simulation-study table."""

    model_order: tuple[str, ...]
    cell_order: tuple[tuple[int, float], ...]
    cells: dict[tuple[str, int, float], MseRatioReport]
    provenance: dict = field(default_factory=dict)


def table1_grid(models: Sequence[ModelSpec], n_values: Sequence[int],
                betas: Sequence[float], replicates: int = 1000,
                master_seed: int = 20090102, *, draws_as: str = "losses",
                progress: Optional[Callable[[str], None]] = None) -> Table1Report:
    """MSE-ratio experiments over a (model, n, beta) grid.

    Cells run independently; each one's substreams are derived from a cell
    tag hashed into the master seed, so partial grids and full grids agree
    cell-by-cell.
    """
    cells: dict[tuple[str, int, float], MseRatioReport] = {}
    for model in models:
        for n in n_values:
            for beta in betas:
                tag = f"{model.label()}|{n}|{beta:g}"
                cell_seed = master_seed + (hash_tag(tag) % 1_000_003)
                cfg = MseExperimentConfig(
                    model=model, spectrum=RiskSpectrum.exponential(beta),
                    n=int(n), replicates=replicates, master_seed=cell_seed,
                    draws_as=draws_as)
                report = mse_ratio_experiment(cfg)
                cells[(model.label(), int(n), float(beta))] = report
                if progress is not None:
                    progress(f"{tag}: ratio={report.ratio:.3f} "
                             f"(se {report.ratio_se:.3f})")
    settings = {"models": tuple(m.label() for m in models),
                "n_values": tuple(int(n) for n in n_values),
                "betas": tuple(float(b) for b in betas),
                "replicates": replicates, "seed": master_seed,
                "draws_as": draws_as}
    return Table1Report(
        model_order=tuple(m.label() for m in models),
        cell_order=tuple((int(n), float(b)) for n in n_values for b in betas),
        cells=cells, provenance=run_stamp(settings))


def hash_tag(tag: str) -> int:
    """Deterministic cross-run alternative to the builtin hash."""
    import hashlib

    return int.from_bytes(hashlib.sha256(tag.encode()).digest()[:8], "big")
