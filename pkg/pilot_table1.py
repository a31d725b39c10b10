# Development pilot: check Table-1-style MSE ratios under both draw
# orientations before freezing montecarlo defaults.  Not part of the package.
import time

import numpy as np

import spectralrisk as sr
from spectralrisk import _accel
from spectralrisk.riskmeasure import DistortionFunction, lstat_weights
from spectralrisk.rng import substream

EPS = 1e-6
PANELS = 64
TOL = 1e-10
MAXIT = 200
BW_CONST = sr.SWANEPOEL_CONSTANT
SCALE_EXP = -4.0 / 7.0
N_EXP = -1.0 / 7.0


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


def cell(model, n, beta, B, seed, draws_as):
    spec = sr.RiskSpectrum.exponential(beta)
    theta = sr.true_srm(model, spec, draws_as=draws_as)
    draws = draw_matrix(model, n, B, seed)
    losses = draws if draws_as == "losses" else -draws
    cni = lstat_weights(DistortionFunction(spec), n).weights
    emp, ker, bws = _accel.mse_pair_batch(
        np.ascontiguousarray(losses), cni, spec.code, spec.param, EPS, PANELS,
        TOL, MAXIT, BW_CONST, SCALE_EXP, N_EXP)
    a = (emp - theta) ** 2
    bb = (ker - theta) ** 2
    mse1, mse2 = a.mean(), bb.mean()
    r = mse2 / mse1
    va, vb = a.var(ddof=1), bb.var(ddof=1)
    cov = np.cov(a, bb, ddof=1)[0, 1]
    se = np.sqrt((vb / mse1**2 + mse2**2 * va / mse1**4
                  - 2 * mse2 * cov / mse1**3) / B)
    return r, se, theta, bws.mean()


targets = {
    ("normal", 30, 1): 0.758, ("normal", 30, 5): 0.905, ("normal", 250, 10): 0.996,
    ("t", 30, 1): 0.638, ("t", 30, 5): 0.810, ("t", 250, 10): 0.994,
    ("gpd", 30, 1): 0.704, ("gpd", 30, 5): 0.790, ("gpd", 250, 10): 0.993,
    ("garch", 30, 1): 0.679,
}
models = {
    "normal": sr.ModelSpec.normal(),
    "t": sr.ModelSpec.student_t(4.0),
    "gpd": sr.ModelSpec.gpd(1.0 / 3.0),
    "garch": sr.ModelSpec.garch(),
}

t0 = time.time()
for (mname, n, beta), target in targets.items():
    line = f"{mname:7s} n={n:4d} beta={beta:3d} paper={target:.3f}"
    for draws_as in ("losses", "returns"):
        if mname in ("normal", "t") and draws_as == "returns":
            continue
        r, se, theta, mb = cell(models[mname], n, beta, 1000, 20260810, draws_as)
        line += f" | {draws_as[:4]}: r={r:.3f} se={se:.3f} th={theta:+.3f} b={mb:.2f}"
    print(line, flush=True)
print("elapsed", time.time() - t0)
