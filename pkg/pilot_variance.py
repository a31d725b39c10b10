# Development pilot: are the published ratios variance ratios (MSE around
# the MC mean) rather than MSE around the analytic truth?
import numpy as np

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


cells = [
    ("normal", 30, 1, 0.758), ("normal", 30, 5, 0.905), ("normal", 250, 10, 0.996),
    ("t", 30, 1, 0.638), ("t", 30, 5, 0.810), ("t", 250, 10, 0.994),
    ("gpd", 30, 1, 0.704), ("gpd", 30, 5, 0.790), ("gpd", 250, 10, 0.993),
    ("garch", 30, 1, 0.679),
]
models = {"normal": sr.ModelSpec.normal(), "t": sr.ModelSpec.student_t(4.0),
          "gpd": sr.ModelSpec.gpd(1.0 / 3.0), "garch": sr.ModelSpec.garch()}

for mname, n, beta, target in cells:
    spec = sr.RiskSpectrum.exponential(beta)
    losses = draw_matrix(models[mname], n, 1000, 2718)
    cni = lstat_weights(DistortionFunction(spec), n).weights
    emp, ker, _ = _accel.mse_pair_batch(
        np.ascontiguousarray(losses), cni, spec.code, spec.param, 1e-6, 64,
        1e-10, 200, sr.SWANEPOEL_CONSTANT, -4.0 / 7.0, -1.0 / 7.0)
    vr = ker.var() / emp.var()
    print(f"{mname:7s} n={n:4d} beta={beta:3d} target={target:.3f} "
          f"var-ratio={vr:.3f}", flush=True)
