# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; same signatures and semantics as ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport asin, exp, fabs, lgamma, log, log1p, pow, sin, tan, NAN, M_PI

cnp.import_array()

cdef double DEG = M_PI / 180.0
cdef double CF_EPS = 1e-16
cdef double CF_TINY = 1e-300
cdef int CF_MAX_ITER = 2000


def channel_batch(u, double shape, double scale, double n_ratio, double theta_c,
                  double theta_fov, double z_a, double a0, double inv_weq2, double h_l):
    cdef const double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t n = uv.shape[0]
    theta_i = np.empty(n, dtype=np.float64)
    theta_a = np.empty(n, dtype=np.float64)
    r_d = np.empty(n, dtype=np.float64)
    h_p = np.empty(n, dtype=np.float64)
    h_a = np.empty(n, dtype=np.int8)
    h = np.empty(n, dtype=np.float64)
    cdef double[::1] ti = theta_i
    cdef double[::1] ta = theta_a
    cdef double[::1] rd = r_d
    cdef double[::1] hp = h_p
    cdef cnp.int8_t[::1] ha = h_a
    cdef double[::1] hh = h
    cdef double inv_shape = 1.0 / shape
    cdef double th, s, a, r, p
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            th = scale * pow(-log1p(-uv[i]), inv_shape)
            ti[i] = th
            if th > theta_c:
                ta[i] = NAN
                rd[i] = NAN
                hp[i] = 0.0
                ha[i] = 0
                hh[i] = 0.0
                continue
            s = n_ratio * sin(th * DEG)
            if s > 1.0:
                s = 1.0
            a = asin(s) / DEG - th
            if a < 0.0:
                a = 0.0
            ta[i] = a
            r = z_a * tan(a * DEG)
            rd[i] = r
            p = a0 * exp(-2.0 * r * r * inv_weq2)
            hp[i] = p
            if a <= theta_fov:
                ha[i] = 1
                hh[i] = h_l * p
            else:
                ha[i] = 0
                hh[i] = 0.0
    return theta_i, theta_a, r_d, h_p, h_a, h


cdef double _betacf(double x, double a, double b) nogil:
    cdef double qab = a + b
    cdef double qap = a + 1.0
    cdef double qam = a - 1.0
    cdef double c = 1.0
    cdef double d = 1.0 - qab * x / qap
    cdef double h, num, delta
    cdef int m, m2
    if fabs(d) < CF_TINY:
        d = CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, CF_MAX_ITER + 1):
        m2 = 2 * m
        num = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + num * d
        if fabs(d) < CF_TINY:
            d = CF_TINY
        c = 1.0 + num / c
        if fabs(c) < CF_TINY:
            c = CF_TINY
        d = 1.0 / d
        h *= d * c
        num = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + num * d
        if fabs(d) < CF_TINY:
            d = CF_TINY
        c = 1.0 + num / c
        if fabs(c) < CF_TINY:
            c = CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if fabs(delta - 1.0) < CF_EPS:
            return h
    return NAN


def betainc(x, double a, double b):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64).ravel()
    cdef Py_ssize_t n = xv.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double lbeta = lgamma(a) + lgamma(b) - lgamma(a + b)
    cdef double split = (a + 1.0) / (a + b + 2.0)
    cdef double xi, front, cf, res
    cdef Py_ssize_t i
    cdef bint failed = False
    with nogil:
        for i in range(n):
            xi = xv[i]
            if xi <= 0.0:
                ov[i] = 0.0
                continue
            if xi >= 1.0:
                ov[i] = 1.0
                continue
            front = exp(a * log(xi) + b * log1p(-xi) - lbeta)
            if xi < split:
                cf = _betacf(xi, a, b)
                res = front * cf / a
            else:
                cf = _betacf(1.0 - xi, b, a)
                res = 1.0 - front * cf / b
            if cf != cf:
                failed = True
            if res < 0.0:
                res = 0.0
            elif res > 1.0:
                res = 1.0
            ov[i] = res
    if failed:
        raise ArithmeticError("incomplete Beta continued fraction did not converge")
    return out.reshape(np.shape(x))


def beta_mixture_estep(lx, l1x, double w1, double a1, double b1, double a2, double b2):
    cdef const double[::1] lxv = np.ascontiguousarray(lx, dtype=np.float64)
    cdef const double[::1] lyv = np.ascontiguousarray(l1x, dtype=np.float64)
    cdef Py_ssize_t n = lxv.shape[0]
    cdef double c1 = log(w1) - (lgamma(a1) + lgamma(b1) - lgamma(a1 + b1))
    cdef double c2 = log1p(-w1) - (lgamma(a2) + lgamma(b2) - lgamma(a2 + b2))
    cdef double loglik = 0.0, n1 = 0.0, s1x = 0.0, s1y = 0.0, s2x = 0.0, s2y = 0.0
    cdef double l1, l2, m, e1, e2, tot, r1, r2
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            l1 = c1 + (a1 - 1.0) * lxv[i] + (b1 - 1.0) * lyv[i]
            l2 = c2 + (a2 - 1.0) * lxv[i] + (b2 - 1.0) * lyv[i]
            m = l1 if l1 > l2 else l2
            e1 = exp(l1 - m)
            e2 = exp(l2 - m)
            tot = e1 + e2
            loglik += m + log(tot)
            r1 = e1 / tot
            r2 = e2 / tot
            n1 += r1
            s1x += r1 * lxv[i]
            s1y += r1 * lyv[i]
            s2x += r2 * lxv[i]
            s2y += r2 * lyv[i]
    return loglik, n1, s1x, s1y, s2x, s2y
