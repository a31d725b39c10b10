# Development pilot: which (empirical, kernel) estimator pair reproduces the
# published ratios?  E1 = distortion-increment L-stat, E2 = phi(i/n)/n
# weights; K1 = quantile-integral of the smoothed CDF, K2 = phi(F_b(X_i))/n
# weights on raw points, K3 = K2 renormalized.
import numpy as np
from scipy.special import ndtr

import spectralrisk as sr
from spectralrisk import _accel
from spectralrisk.riskmeasure import DistortionFunction, lstat_weights
from spectralrisk.rng import substream


def draw_matrix(model, n, B, seed):
    rows = np.empty((B, n))
    for j in range(B):
        rng = substream(seed, j)
        if model.kind == "garch":
            z = rng.standard_normal(n + 500)
            w = model.garch_omega
            s2 = w / (1 - model.garch_alpha1 - model.garch_beta1) if w > 0 else 1.0
            rows[j] = _accel.garch_path(z, w, model.garch_alpha1,
                                        model.garch_beta1, s2)[500:]
        else:
            rows[j] = sr.quantile(model, rng.random(n))
    return rows


def smoothed_cdf_at_data(row_sorted, b):
    return ndtr((row_sorted[:, None] - row_sorted[None, :]) / b).mean(axis=1)


def cell(model, n, beta, B, seed):
    spec = sr.RiskSpectrum.exponential(beta)
    theta = sr.true_srm(model, spec)
    losses = draw_matrix(model, n, B, seed)
    cni = lstat_weights(DistortionFunction(spec), n).weights
    phi_grid = spec.phi(np.arange(1, n + 1) / (n + 1e-30) - 0.0)  # phi(i/n)
    ests = {k: np.empty(B) for k in ("E1", "E2", "K1", "K2", "K3")}
    for j in range(B):
        row = np.sort(losses[j])
        s = np.std(row, ddof=1)
        q1, q3 = np.percentile(row, [25, 75])
        sig = min(s, (q3 - q1) / 1.349)
        b = sr.SWANEPOEL_CONSTANT * sig ** (-4.0 / 7.0) * n ** (-1.0 / 7.0)
        ests["E1"][j] = row @ cni
        ests["E2"][j] = row @ phi_grid / n
        v, ok = _accel.srm_smoothed(row, b, 1, spec.code, spec.param, 1e-6,
                                    64, 1e-10, 200)
        ests["K1"][j] = v
        fb = smoothed_cdf_at_data(row, b)
        w = spec.phi(fb)
        ests["K2"][j] = row @ w / n
        ests["K3"][j] = row @ w / w.sum()
    mse = {k: ((v - theta) ** 2).mean() for k, v in ests.items()}
    return mse


cells = [
    ("normal", 30, 1, 0.758), ("normal", 30, 5, 0.905), ("normal", 250, 10, 0.996),
    ("t", 30, 1, 0.638), ("t", 30, 5, 0.810), ("t", 250, 10, 0.994),
    ("gpd", 30, 1, 0.704), ("gpd", 30, 5, 0.790), ("gpd", 250, 10, 0.993),
    ("garch", 30, 1, 0.679),
]
models = {"normal": sr.ModelSpec.normal(), "t": sr.ModelSpec.student_t(4.0),
          "gpd": sr.ModelSpec.gpd(1.0 / 3.0), "garch": sr.ModelSpec.garch()}

print(f"{'cell':24s} target  K1/E1  K2/E1  K3/E1  K2/E2  K3/E2  K1/E2")
for mname, n, beta, target in cells:
    mse = cell(models[mname], n, beta, 500, 314159)
    print(f"{mname:7s} n={n:4d} b={beta:3d}  {target:.3f}"
          f"  {mse['K1'] / mse['E1']:.3f}  {mse['K2'] / mse['E1']:.3f}"
          f"  {mse['K3'] / mse['E1']:.3f}  {mse['K2'] / mse['E2']:.3f}"
          f"  {mse['K3'] / mse['E2']:.3f}  {mse['K1'] / mse['E2']:.3f}",
          flush=True)
