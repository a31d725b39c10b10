"""Numerical hot loops: smoothed-CDF evaluation, quantile inversion, risk
integrals, GARCH recursion, and the batched Monte-Carlo / bootstrap drivers.

Every kernel exists twice: a numba ``@njit`` build (default) and a pure-numpy
build selected by setting ``SPECTRALRISK_DISABLE_NUMBA=1`` (also used
automatically when numba is absent).  Both builds accumulate in the same index
order, so they agree to floating-point roundoff; batched drivers write one
slot per replicate, which keeps results independent of the worker count.
"""

from __future__ import annotations

import math
import os

import numpy as np
from scipy.special import ndtr

__all__ = [
    "NUMBA_ENABLED",
    "backend_name",
    "kernel_cdf_batch",
    "kernel_pdf_batch",
    "kernel_quantile_batch",
    "srm_smoothed",
    "garch_path",
    "mse_pair_batch",
    "bootstrap_batch",
]

# kernel identity codes
K_GAUSSIAN = 1
K_EPANECHNIKOV = 2

# spectrum identity codes
S_EXPONENTIAL = 1
S_POWER_LOW = 2
S_POWER_HIGH = 3
S_EXPECTED_SHORTFALL = 4

_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_NORM_PDF_C = 1.0 / math.sqrt(2.0 * math.pi)

# 8-node Gauss-Legendre rule on [-1, 1], shared by all composite quadratures
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def _flag(name: str) -> bool:
    return os.environ.get(name, "").strip().lower() in {"1", "true", "yes", "on"}


# --------------------------------------------------------------------------
# pure-numpy reference build
# --------------------------------------------------------------------------

def _ikernel_np(t, kind):
    if kind == K_GAUSSIAN:
        return ndtr(t)
    out = np.clip(0.5 + 0.75 * t - 0.25 * t**3, 0.0, 1.0)
    out[t <= -1.0] = 0.0
    out[t >= 1.0] = 1.0
    return out


def _dkernel_np(t, kind):
    if kind == K_GAUSSIAN:
        return _NORM_PDF_C * np.exp(-0.5 * t * t)
    return np.where(np.abs(t) < 1.0, 0.75 * (1.0 - t * t), 0.0)


def kernel_cdf_batch_np(x, data, b, kind=K_GAUSSIAN):
    """Mean of integrated kernels: F(x_j) = (1/n) sum_i K((x_j - X_i)/b)."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    out = np.empty(x.size, dtype=np.float64)
    step = max(1, (1 << 22) // max(1, data.size))
    for s in range(0, x.size, step):
        blk = x[s:s + step, None] - data[None, :]
        out[s:s + step] = _ikernel_np(blk / b, kind).mean(axis=1)
    return out


def kernel_pdf_batch_np(x, data, b, kind=K_GAUSSIAN):
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    out = np.empty(x.size, dtype=np.float64)
    step = max(1, (1 << 22) // max(1, data.size))
    for s in range(0, x.size, step):
        blk = x[s:s + step, None] - data[None, :]
        out[s:s + step] = _dkernel_np(blk / b, kind).mean(axis=1) / b
    return out


def kernel_quantile_batch_np(u, data, b, kind, tol, max_iter):
    """Bracketed bisection, stopping on |F(x) - u| <= tol per node.

    Returns (x, fail_index, fail_lo, fail_hi); fail_index is -1 when every
    node converged, otherwise the first node whose iteration budget ran out.
    """
    u = np.atleast_1d(np.asarray(u, dtype=np.float64))
    lo = np.full(u.size, data[0] - 10.0 * b)
    hi = np.full(u.size, data[-1] + 10.0 * b)
    width = hi[0] - lo[0]
    # geometric widening; a no-op for any kernel with K(-10)=0, K(10)=1
    for _ in range(64):
        bad = kernel_cdf_batch_np(lo, data, b, kind) > u
        if not bad.any():
            break
        lo[bad] -= width
        width *= 2.0
    width = hi[0] - lo[0]
    for _ in range(64):
        bad = kernel_cdf_batch_np(hi, data, b, kind) < u
        if not bad.any():
            break
        hi[bad] += width
        width *= 2.0
    x = 0.5 * (lo + hi)
    active = np.ones(u.size, dtype=bool)
    for _ in range(max_iter):
        fx = kernel_cdf_batch_np(x[active], data, b, kind)
        resid = fx - u[active]
        done = np.abs(resid) <= tol
        idx = np.flatnonzero(active)
        low_side = idx[resid < 0.0]
        high_side = idx[resid > 0.0]
        lo[low_side] = x[low_side]
        hi[high_side] = x[high_side]
        active[idx[done]] = False
        if not active.any():
            return x, -1, 0.0, 0.0
        x[active] = 0.5 * (lo[active] + hi[active])
    first = int(np.flatnonzero(active)[0])
    return x, first, float(lo[first]), float(hi[first])


def _distortion_np(skind, p1, u):
    if skind == S_EXPONENTIAL:
        em = math.exp(-p1)
        return (np.exp(-p1 * (1.0 - u)) - em) / (1.0 - em)
    if skind == S_POWER_LOW:
        return 1.0 - (1.0 - u) ** p1
    if skind == S_POWER_HIGH:
        return u**p1
    return np.clip((u - (1.0 - p1)) / p1, 0.0, 1.0)


def _spectrum_breaks(skind, p1):
    # interior u-points where the weight density is discontinuous
    if skind == S_EXPECTED_SHORTFALL:
        return [1.0 - p1]
    return []


def srm_smoothed_np(data, b, kind, skind, p1, eps, panels, tol, max_iter):
    """Weighted-quantile integral of the smoothed CDF over losses ``data``.

    Computes integral_{eps}^{1-eps} F^{-1}(u) phi(u) du through the exact
    change of variables u = F(x) followed by integration by parts, so only
    CDF evaluations are needed:

        value = c*D(F(c)) - a*D(F(a)) - integral_a^c D(F(x)) dx,

    a = F^{-1}(eps), c = F^{-1}(1-eps), D the cumulative weight.  Composite
    Gauss-Legendre panels are split at weight-density discontinuities.
    """
    targets = np.array([eps] + _spectrum_breaks(skind, p1) + [1.0 - eps])
    xs, fail, flo, fhi = kernel_quantile_batch_np(targets, data, b, kind, tol, max_iter)
    if fail >= 0:
        return math.nan, False
    a, c = xs[0], xs[-1]
    fa = kernel_cdf_batch_np(np.array([a]), data, b, kind)[0]
    fc = kernel_cdf_batch_np(np.array([c]), data, b, kind)[0]
    total = c * _distortion_np(skind, p1, np.array([fc]))[0]
    total -= a * _distortion_np(skind, p1, np.array([fa]))[0]
    span = c - a
    for x0, x1 in zip(xs[:-1], xs[1:]):
        m = max(1, int(round(panels * (x1 - x0) / span)))
        h = (x1 - x0) / m
        centers = x0 + h * (np.arange(m) + 0.5)
        nodes = (centers[:, None] + 0.5 * h * _GL_NODES[None, :]).ravel()
        fvals = kernel_cdf_batch_np(nodes, data, b, kind)
        dvals = _distortion_np(skind, p1, fvals).reshape(m, -1)
        total -= 0.5 * h * float((dvals * _GL_WEIGHTS[None, :]).sum())
    return total, True


def garch_path_np(z, omega, alpha1, beta1, s2_init):
    x = np.empty(z.size, dtype=np.float64)
    s2 = s2_init
    for i in range(z.size):
        x[i] = math.sqrt(s2) * z[i]
        s2 = omega + alpha1 * x[i] * x[i] + beta1 * s2
    return x


def _scale_np(sorted_row):
    n = sorted_row.size
    s = float(np.std(sorted_row, ddof=1))
    q1 = _lin_quantile_np(sorted_row, 0.25)
    q3 = _lin_quantile_np(sorted_row, 0.75)
    return min(s, (q3 - q1) / 1.349)


def _lin_quantile_np(sorted_row, p):
    # linear-interpolation quantile of pre-sorted data (numpy default rule)
    pos = p * (sorted_row.size - 1)
    lo = int(math.floor(pos))
    hi = min(lo + 1, sorted_row.size - 1)
    frac = pos - lo
    return float(sorted_row[lo] * (1.0 - frac) + sorted_row[hi] * frac)


def mse_pair_batch_np(samples, cni, skind, p1, eps, panels, tol, max_iter,
                      bw_const, bw_scale_exp, bw_n_exp):
    """Both estimators per replicate row; returns (empirical, smoothed, bw)."""
    nrep, n = samples.shape
    emp = np.empty(nrep)
    ker = np.empty(nrep)
    bws = np.empty(nrep)
    n_factor = float(n) ** bw_n_exp
    for j in range(nrep):
        row = np.sort(samples[j])
        emp[j] = float(row @ cni)
        bw = bw_const * _scale_np(row) ** bw_scale_exp * n_factor
        bws[j] = bw
        val, ok = srm_smoothed_np(row, bw, K_GAUSSIAN, skind, p1, eps, panels,
                                  tol, max_iter)
        ker[j] = val if ok else math.nan
    return emp, ker, bws


def bootstrap_batch_np(data, idx, skind, p1, eps, panels, tol, max_iter,
                       bw_const, bw_scale_exp, bw_n_exp):
    nrep, n = idx.shape
    out = np.empty(nrep)
    n_factor = float(n) ** bw_n_exp
    for j in range(nrep):
        row = np.sort(data[idx[j]])
        bw = bw_const * _scale_np(row) ** bw_scale_exp * n_factor
        val, ok = srm_smoothed_np(row, bw, K_GAUSSIAN, skind, p1, eps, panels,
                                  tol, max_iter)
        out[j] = val if ok else math.nan
    return out


# --------------------------------------------------------------------------
# numba build
# --------------------------------------------------------------------------

NUMBA_ENABLED = False

if not _flag("SPECTRALRISK_DISABLE_NUMBA"):
    try:
        os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")
        from numba import njit, prange

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - exercised via the env flag
        NUMBA_ENABLED = False

if NUMBA_ENABLED:

    @njit(cache=True)
    def _ikernel(t, kind):
        if kind == K_GAUSSIAN:
            return 0.5 * math.erfc(-t * _INV_SQRT2)
        if t <= -1.0:
            return 0.0
        if t >= 1.0:
            return 1.0
        return 0.5 + 0.75 * t - 0.25 * t * t * t

    @njit(cache=True)
    def _dkernel(t, kind):
        if kind == K_GAUSSIAN:
            return _NORM_PDF_C * math.exp(-0.5 * t * t)
        if t <= -1.0 or t >= 1.0:
            return 0.0
        return 0.75 * (1.0 - t * t)

    @njit(cache=True)
    def _cdf_one(x, data, b, kind):
        acc = 0.0
        for i in range(data.size):
            acc += _ikernel((x - data[i]) / b, kind)
        return acc / data.size

    @njit(cache=True)
    def _pdf_one(x, data, b, kind):
        acc = 0.0
        for i in range(data.size):
            acc += _dkernel((x - data[i]) / b, kind)
        return acc / (data.size * b)

    @njit(cache=True)
    def _kernel_cdf_batch(x, data, b, kind):
        out = np.empty(x.size, dtype=np.float64)
        for j in range(x.size):
            out[j] = _cdf_one(x[j], data, b, kind)
        return out

    @njit(cache=True)
    def _kernel_pdf_batch(x, data, b, kind):
        out = np.empty(x.size, dtype=np.float64)
        for j in range(x.size):
            out[j] = _pdf_one(x[j], data, b, kind)
        return out

    @njit(cache=True)
    def _invert_one(u, data, b, kind, tol, max_iter):
        lo = data[0] - 10.0 * b
        hi = data[data.size - 1] + 10.0 * b
        width = hi - lo
        for _ in range(64):
            if _cdf_one(lo, data, b, kind) <= u:
                break
            lo -= width
            width *= 2.0
        width = hi - lo
        for _ in range(64):
            if _cdf_one(hi, data, b, kind) >= u:
                break
            hi += width
            width *= 2.0
        x = 0.5 * (lo + hi)
        for _ in range(max_iter):
            resid = _cdf_one(x, data, b, kind) - u
            if abs(resid) <= tol:
                return x, True, lo, hi
            if resid < 0.0:
                lo = x
            else:
                hi = x
            x = 0.5 * (lo + hi)
        return x, False, lo, hi

    @njit(cache=True)
    def _kernel_quantile_batch(u, data, b, kind, tol, max_iter):
        out = np.empty(u.size, dtype=np.float64)
        for j in range(u.size):
            x, ok, lo, hi = _invert_one(u[j], data, b, kind, tol, max_iter)
            out[j] = x
            if not ok:
                return out, j, lo, hi
        return out, -1, 0.0, 0.0

    @njit(cache=True)
    def _distortion_one(skind, p1, u):
        if skind == S_EXPONENTIAL:
            em = math.exp(-p1)
            return (math.exp(-p1 * (1.0 - u)) - em) / (1.0 - em)
        if skind == S_POWER_LOW:
            return 1.0 - (1.0 - u) ** p1
        if skind == S_POWER_HIGH:
            return u**p1
        v = (u - (1.0 - p1)) / p1
        if v < 0.0:
            return 0.0
        if v > 1.0:
            return 1.0
        return v

    @njit(cache=True)
    def _srm_smoothed(data, b, kind, skind, p1, eps, panels, tol, max_iter,
                      gl_x, gl_w):
        nbreak = 1 if skind == S_EXPECTED_SHORTFALL else 0
        xs = np.empty(nbreak + 2, dtype=np.float64)
        a, ok, _, _ = _invert_one(eps, data, b, kind, tol, max_iter)
        if not ok:
            return math.nan, False
        xs[0] = a
        if nbreak == 1:
            xbrk, ok, _, _ = _invert_one(1.0 - p1, data, b, kind, tol, max_iter)
            if not ok:
                return math.nan, False
            xs[1] = xbrk
        c, ok, _, _ = _invert_one(1.0 - eps, data, b, kind, tol, max_iter)
        if not ok:
            return math.nan, False
        xs[nbreak + 1] = c
        fa = _cdf_one(a, data, b, kind)
        fc = _cdf_one(c, data, b, kind)
        total = c * _distortion_one(skind, p1, fc) - a * _distortion_one(skind, p1, fa)
        span = c - a
        for seg in range(nbreak + 1):
            x0 = xs[seg]
            x1 = xs[seg + 1]
            m = int(round(panels * (x1 - x0) / span))
            if m < 1:
                m = 1
            h = (x1 - x0) / m
            for k in range(m):
                center = x0 + h * (k + 0.5)
                acc = 0.0
                for q in range(gl_x.size):
                    x = center + 0.5 * h * gl_x[q]
                    acc += gl_w[q] * _distortion_one(skind, p1, _cdf_one(x, data, b, kind))
                total -= 0.5 * h * acc
        return total, True

    @njit(cache=True)
    def _garch_path(z, omega, alpha1, beta1, s2_init):
        x = np.empty(z.size, dtype=np.float64)
        s2 = s2_init
        for i in range(z.size):
            x[i] = math.sqrt(s2) * z[i]
            s2 = omega + alpha1 * x[i] * x[i] + beta1 * s2
        return x

    @njit(cache=True)
    def _lin_quantile(sorted_row, p):
        pos = p * (sorted_row.size - 1)
        lo = int(math.floor(pos))
        hi = lo + 1
        if hi > sorted_row.size - 1:
            hi = sorted_row.size - 1
        frac = pos - lo
        return sorted_row[lo] * (1.0 - frac) + sorted_row[hi] * frac

    @njit(cache=True)
    def _scale_min(sorted_row):
        n = sorted_row.size
        mean = 0.0
        for i in range(n):
            mean += sorted_row[i]
        mean /= n
        ss = 0.0
        for i in range(n):
            d = sorted_row[i] - mean
            ss += d * d
        s = math.sqrt(ss / (n - 1))
        iqr = _lin_quantile(sorted_row, 0.75) - _lin_quantile(sorted_row, 0.25)
        r = iqr / 1.349
        return s if s < r else r

    @njit(cache=True, parallel=True)
    def _mse_pair_batch(samples, cni, skind, p1, eps, panels, tol, max_iter,
                        bw_const, bw_scale_exp, bw_n_exp, gl_x, gl_w):
        nrep, n = samples.shape
        emp = np.empty(nrep, dtype=np.float64)
        ker = np.empty(nrep, dtype=np.float64)
        bws = np.empty(nrep, dtype=np.float64)
        n_factor = float(n) ** bw_n_exp
        for j in prange(nrep):
            row = np.sort(samples[j])
            acc = 0.0
            for i in range(n):
                acc += row[i] * cni[i]
            emp[j] = acc
            bw = bw_const * _scale_min(row) ** bw_scale_exp * n_factor
            bws[j] = bw
            val, ok = _srm_smoothed(row, bw, K_GAUSSIAN, skind, p1, eps,
                                    panels, tol, max_iter, gl_x, gl_w)
            ker[j] = val if ok else math.nan
        return emp, ker, bws

    @njit(cache=True, parallel=True)
    def _bootstrap_batch(data, idx, skind, p1, eps, panels, tol, max_iter,
                         bw_const, bw_scale_exp, bw_n_exp, gl_x, gl_w):
        nrep, n = idx.shape
        out = np.empty(nrep, dtype=np.float64)
        n_factor = float(n) ** bw_n_exp
        for j in prange(nrep):
            row = np.empty(n, dtype=np.float64)
            for i in range(n):
                row[i] = data[idx[j, i]]
            row = np.sort(row)
            bw = bw_const * _scale_min(row) ** bw_scale_exp * n_factor
            val, ok = _srm_smoothed(row, bw, K_GAUSSIAN, skind, p1, eps,
                                    panels, tol, max_iter, gl_x, gl_w)
            out[j] = val if ok else math.nan
        return out


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------

def backend_name() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"


if NUMBA_ENABLED:

    def kernel_cdf_batch(x, data, b, kind=K_GAUSSIAN):
        x = np.atleast_1d(np.ascontiguousarray(x, dtype=np.float64))
        return _kernel_cdf_batch(x, data, b, kind)

    def kernel_pdf_batch(x, data, b, kind=K_GAUSSIAN):
        x = np.atleast_1d(np.ascontiguousarray(x, dtype=np.float64))
        return _kernel_pdf_batch(x, data, b, kind)

    def kernel_quantile_batch(u, data, b, kind, tol, max_iter):
        u = np.atleast_1d(np.ascontiguousarray(u, dtype=np.float64))
        return _kernel_quantile_batch(u, data, b, kind, tol, max_iter)

    def srm_smoothed(data, b, kind, skind, p1, eps, panels, tol, max_iter):
        return _srm_smoothed(data, b, kind, skind, p1, eps, panels, tol,
                             max_iter, _GL_NODES, _GL_WEIGHTS)

    garch_path = _garch_path

    def mse_pair_batch(samples, cni, skind, p1, eps, panels, tol, max_iter,
                       bw_const, bw_scale_exp, bw_n_exp):
        return _mse_pair_batch(samples, cni, skind, p1, eps, panels, tol,
                               max_iter, bw_const, bw_scale_exp, bw_n_exp,
                               _GL_NODES, _GL_WEIGHTS)

    def bootstrap_batch(data, idx, skind, p1, eps, panels, tol, max_iter,
                        bw_const, bw_scale_exp, bw_n_exp):
        return _bootstrap_batch(data, idx, skind, p1, eps, panels, tol,
                                max_iter, bw_const, bw_scale_exp, bw_n_exp,
                                _GL_NODES, _GL_WEIGHTS)

else:
    kernel_cdf_batch = kernel_cdf_batch_np
    kernel_pdf_batch = kernel_pdf_batch_np
    kernel_quantile_batch = kernel_quantile_batch_np
    srm_smoothed = srm_smoothed_np
    garch_path = garch_path_np
    mse_pair_batch = mse_pair_batch_np
    bootstrap_batch = bootstrap_batch_np
