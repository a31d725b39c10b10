# Development pilot: which bandwidth reproduces each published ratio?
import numpy as np

import spectralrisk as sr
from spectralrisk import _accel
from spectralrisk.riskmeasure import DistortionFunction, lstat_weights
from spectralrisk.rng import substream

EPS, PANELS, TOL, MAXIT = 1e-6, 64, 1e-10, 200


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


def ratio_fixed_b(model, n, beta, B, seed, b):
    spec = sr.RiskSpectrum.exponential(beta)
    theta = sr.true_srm(model, spec)
    losses = draw_matrix(model, n, B, seed)
    cni = lstat_weights(DistortionFunction(spec), n).weights
    # fixed bandwidth: bw_const = b with zero exponents
    emp, ker, _ = _accel.mse_pair_batch(
        np.ascontiguousarray(losses), cni, spec.code, spec.param, EPS, PANELS,
        TOL, MAXIT, b, 0.0, 0.0)
    return float(((ker - theta) ** 2).mean() / ((emp - theta) ** 2).mean())


cells = [
    ("normal", 30, 1, 0.758), ("normal", 30, 5, 0.905), ("normal", 250, 10, 0.996),
    ("t", 30, 1, 0.638), ("t", 30, 5, 0.810), ("t", 250, 10, 0.994),
    ("gpd", 30, 1, 0.704), ("gpd", 30, 5, 0.790), ("gpd", 250, 10, 0.993),
    ("garch", 30, 1, 0.679),
]
models = {"normal": sr.ModelSpec.normal(), "t": sr.ModelSpec.student_t(4.0),
          "gpd": sr.ModelSpec.gpd(1.0 / 3.0), "garch": sr.ModelSpec.garch()}

grid = [0.02, 0.05, 0.08, 0.12, 0.17, 0.24, 0.33, 0.45, 0.60]
for mname, n, beta, target in cells:
    rs = [ratio_fixed_b(models[mname], n, beta, 400, 77, b) for b in grid]
    best = min(range(len(grid)), key=lambda i: abs(rs[i] - target))
    print(f"{mname:7s} n={n:4d} beta={beta:3d} target={target:.3f} "
          + " ".join(f"{b:.2f}:{r:.3f}" for b, r in zip(grid, rs))
          + f"  -> b*~{grid[best]:.2f}", flush=True)
