"""Vectorized numpy implementations of the hot kernels.

These mirror ``_ckernels.pyx`` function by function and are used when the
compiled extension is unavailable (or when forced via ``W2A_KERNELS=python``).
"""
import math

import numpy as np

DEG = math.pi / 180.0

_CF_EPS = 1e-16
_CF_TINY = 1e-300
_CF_MAX_ITER = 2000


def channel_batch(u, shape, scale, n_ratio, theta_c, theta_fov, z_a, a0, inv_weq2, h_l):
    """Map uniforms to exact channel draws.

    Returns ``(theta_i, theta_a, r_d, h_p, h_a, h)``; TIR draws carry NaN in
    ``theta_a`` and ``r_d`` and zero in ``h_p``.
    """
    u = np.asarray(u, dtype=np.float64)
    theta_i = scale * np.power(-np.log1p(-u), 1.0 / shape)
    tir = theta_i > theta_c
    s = np.minimum(n_ratio * np.sin(theta_i * DEG), 1.0)
    theta_a = np.where(tir, np.nan, np.maximum(np.arcsin(s) / DEG - theta_i, 0.0))
    r_d = z_a * np.tan(theta_a * DEG)
    h_p = np.where(tir, 0.0, a0 * np.exp(-2.0 * r_d * r_d * inv_weq2))
    with np.errstate(invalid="ignore"):
        h_a = (~tir & (theta_a <= theta_fov)).astype(np.int8)
    h = h_l * h_p * h_a
    return theta_i, theta_a, r_d, h_p, h_a, h


def betainc(x, a, b):
    """Regularized incomplete Beta I_x(a, b) over an array ``x`` with scalar shapes."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    lbeta = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    lo = x <= 0.0
    hi = x >= 1.0
    out[lo] = 0.0
    out[hi] = 1.0
    inner = ~(lo | hi)
    xi = x[inner]
    direct = xi < (a + 1.0) / (a + b + 2.0)
    # evaluate the fraction at the reflected point where needed
    xx = np.where(direct, xi, 1.0 - xi)
    aa = np.where(direct, a, b)
    bb = np.where(direct, b, a)
    with np.errstate(divide="ignore"):
        front = np.exp(a * np.log(xi) + b * np.log1p(-xi) - lbeta)
    cf = _betacf(xx, aa, bb)
    res = np.where(direct, front * cf / aa, 1.0 - front * cf / aa)
    out[inner] = np.clip(res, 0.0, 1.0)
    return out


def _betacf(x, a, b):
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < _CF_TINY, _CF_TINY, d)
    d = 1.0 / d
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for m in range(1, _CF_MAX_ITER + 1):
        if not active.any():
            break
        m2 = 2 * m
        num = m * (b - m) * x / ((qam + m2) * (a + m2))
        d_new = 1.0 + num * d
        d_new = np.where(np.abs(d_new) < _CF_TINY, _CF_TINY, d_new)
        c_new = 1.0 + num / c
        c_new = np.where(np.abs(c_new) < _CF_TINY, _CF_TINY, c_new)
        d_new = 1.0 / d_new
        h_new = h * d_new * c_new
        num = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d_new = 1.0 + num * d_new
        d_new = np.where(np.abs(d_new) < _CF_TINY, _CF_TINY, d_new)
        c_new = 1.0 + num / c_new
        c_new = np.where(np.abs(c_new) < _CF_TINY, _CF_TINY, c_new)
        d_new = 1.0 / d_new
        delta = d_new * c_new
        h_new = h_new * delta
        # freeze converged lanes so both backends stop at the same term
        d = np.where(active, d_new, d)
        c = np.where(active, c_new, c)
        h = np.where(active, h_new, h)
        active &= np.abs(delta - 1.0) >= _CF_EPS
    if active.any():
        raise ArithmeticError("incomplete Beta continued fraction did not converge")
    return h


def beta_mixture_estep(lx, l1x, w1, a1, b1, a2, b2):
    """One fused E-step pass of the two-component Beta mixture.

    ``lx`` and ``l1x`` are log(x) and log(1 - x). Returns
    ``(loglik, n1, s1x, s1y, s2x, s2y)`` where ``n1`` is the summed
    responsibility of component 1 and ``sjx`` / ``sjy`` are the
    responsibility-weighted sums of log(x) and log(1 - x).
    """
    lx = np.asarray(lx, dtype=np.float64)
    l1x = np.asarray(l1x, dtype=np.float64)
    c1 = math.log(w1) - (math.lgamma(a1) + math.lgamma(b1) - math.lgamma(a1 + b1))
    c2 = math.log1p(-w1) - (math.lgamma(a2) + math.lgamma(b2) - math.lgamma(a2 + b2))
    l1 = c1 + (a1 - 1.0) * lx + (b1 - 1.0) * l1x
    l2 = c2 + (a2 - 1.0) * lx + (b2 - 1.0) * l1x
    m = np.maximum(l1, l2)
    e1 = np.exp(l1 - m)
    e2 = np.exp(l2 - m)
    tot = e1 + e2
    loglik = float(np.sum(m + np.log(tot)))
    r1 = e1 / tot
    r2 = e2 / tot
    return (
        loglik,
        float(r1.sum()),
        float(np.dot(r1, lx)),
        float(np.dot(r1, l1x)),
        float(np.dot(r2, lx)),
        float(np.dot(r2, l1x)),
    )
