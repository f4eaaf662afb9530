"""Special functions, Weibull helpers, quadrature and reproducible random streams.

Everything here is shared plumbing for the channel modules. Scalar special
functions return Python floats; the Weibull helpers accept scalars or numpy
arrays.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate as _integrate

EULER_GAMMA = 0.57721566490153286061

# 53-bit mantissa scale for mapping raw 64-bit words onto (0, 1)
_TWO_M53 = 2.0 ** -53

_CF_EPS = 1e-16
_CF_TINY = 1e-300
_CF_MAX_ITER = 2000


class IntegrationError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message: str, estimate: float, abserr: float):
        super().__init__(message)
        self.estimate = estimate
        self.abserr = abserr


@dataclass(frozen=True)
class WeibullParams:
    """Two-parameter Weibull law; ``scale`` carries the units of the variate (degrees here)."""

    shape: float
    scale: float

    def __post_init__(self):
        if not (self.shape > 0 and math.isfinite(self.shape)):
            raise ValueError(f"Weibull shape must be positive, got {self.shape}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ValueError(f"Weibull scale must be positive, got {self.scale}")

    @property
    def mean(self) -> float:
        return self.scale * math.gamma(1.0 + 1.0 / self.shape)

    @property
    def mode(self) -> float:
        if self.shape <= 1.0:
            return 0.0
        return self.scale * ((self.shape - 1.0) / self.shape) ** (1.0 / self.shape)


# ---------------------------------------------------------------------------
# special functions
# ---------------------------------------------------------------------------

def erf(x: float) -> float:
    """Error function (libm implementation, odd-symmetric by construction)."""
    x = float(x)
    if x < 0.0:
        return -math.erf(-x)
    return math.erf(x)


def ln_gamma(x: float) -> float:
    """Natural log of the Gamma function for x > 0."""
    if not x > 0:
        raise ValueError(f"ln_gamma requires x > 0, got {x}")
    return math.lgamma(x)


def ln_beta(a: float, b: float) -> float:
    return ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)


def digamma(x: float) -> float:
    """Digamma function psi(x) for x > 0.

    Shifts the argument above 10 with the recurrence and finishes with the
    asymptotic expansion.
    """
    if not x > 0:
        raise ValueError(f"digamma requires x > 0, got {x}")
    acc = 0.0
    while x < 10.0:
        acc -= 1.0 / x
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    series = inv2 * (1.0 / 12 - inv2 * (1.0 / 120 - inv2 * (1.0 / 252 - inv2 * (
        1.0 / 240 - inv2 * (1.0 / 132 - inv2 * (691.0 / 32760 - inv2 / 12.0))))))
    return acc + math.log(x) - 0.5 * inv - series


def trigamma(x: float) -> float:
    """Trigamma function psi'(x) for x > 0."""
    if not x > 0:
        raise ValueError(f"trigamma requires x > 0, got {x}")
    acc = 0.0
    while x < 10.0:
        acc += 1.0 / (x * x)
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    series = inv * (1.0 + inv * (0.5 + inv * (1.0 / 6 - inv2 * (1.0 / 30 - inv2 * (
        1.0 / 42 - inv2 * (1.0 / 30 - inv2 * (5.0 / 66 - inv2 * 691.0 / 2730)))))))
    return acc + series


def _betacf(x: float, a: float, b: float) -> float:
    # modified Lentz evaluation of the incomplete Beta continued fraction
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete Beta continued fraction did not converge (x={x}, a={a}, b={b})")


def reg_inc_beta(x: float, a: float, b: float) -> float:
    """Regularized incomplete Beta function I_x(a, b).

    Uses the continued fraction directly when x < (a + 1) / (a + b + 2) and
    the reflection I_x(a, b) = 1 - I_{1-x}(b, a) otherwise.
    """
    if not (a > 0 and b > 0):
        raise ValueError(f"reg_inc_beta requires a, b > 0, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"reg_inc_beta requires 0 <= x <= 1, got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = a * math.log(x) + b * math.log1p(-x) - ln_beta(a, b)
    if x < (a + 1.0) / (a + b + 2.0):
        return min(1.0, math.exp(log_front) * _betacf(x, a, b) / a)
    return max(0.0, 1.0 - math.exp(log_front) * _betacf(1.0 - x, b, a) / b)


# ---------------------------------------------------------------------------
# Weibull
# ---------------------------------------------------------------------------

def _as_out(value, scalar_input: bool):
    return float(value) if scalar_input else value


def weibull_pdf(params: WeibullParams, x):
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(np.isnan(x)):
        raise ValueError("weibull_pdf requires x >= 0")
    k, lam = params.shape, params.scale
    z = x / lam
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (k / lam) * np.power(z, k - 1.0) * np.exp(-np.power(z, k))
    # density at the origin: 0 for k > 1, 1/lambda for k == 1, divergent for k < 1
    if np.any(x == 0):
        origin = 0.0 if k > 1 else (1.0 / lam if k == 1 else np.inf)
        out = np.where(x == 0, origin, out)
    return _as_out(out, scalar)


def weibull_cdf(params: WeibullParams, x):
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(np.isnan(x)):
        raise ValueError("weibull_cdf requires x >= 0")
    out = -np.expm1(-np.power(x / params.scale, params.shape))
    return _as_out(out, scalar)


def weibull_sf(params: WeibullParams, x):
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or np.any(np.isnan(x)):
        raise ValueError("weibull_sf requires x >= 0")
    return _as_out(np.exp(-np.power(x / params.scale, params.shape)), scalar)


def weibull_quantile(params: WeibullParams, p):
    scalar = np.ndim(p) == 0
    p = np.asarray(p, dtype=float)
    if np.any(p < 0) or np.any(p >= 1) or np.any(np.isnan(p)):
        raise ValueError("weibull_quantile requires 0 <= p < 1")
    out = params.scale * np.power(-np.log1p(-p), 1.0 / params.shape)
    return _as_out(out, scalar)


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

def integrate(f, lo: float, hi: float, tol: float = 1e-10, points=None, limit: int = 500) -> float:
    """Adaptive Gauss-Kronrod quadrature of ``f`` over [lo, hi].

    Raises :class:`IntegrationError` (carrying the best estimate) when the
    absolute error estimate stays above ``tol``.
    """
    if lo > hi:
        raise ValueError(f"integrate requires lo <= hi, got [{lo}, {hi}]")
    if lo == hi:
        return 0.0
    kwargs = {"epsabs": tol, "epsrel": 1e-13, "limit": limit, "full_output": 1}
    if points is not None and math.isfinite(lo) and math.isfinite(hi):
        kwargs["points"] = points
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = _integrate.quad(f, lo, hi, **kwargs)
    value, abserr = res[0], res[1]
    if abserr > tol and abserr > 1e-13 * abs(value):
        raise IntegrationError(
            f"quadrature error estimate {abserr:.3e} exceeds tolerance {tol:.1e}", value, abserr
        )
    return value


# ---------------------------------------------------------------------------
# random streams
# ---------------------------------------------------------------------------

def raw_to_uniform(raw: np.ndarray) -> np.ndarray:
    """Map 64-bit words to doubles strictly inside (0, 1): ((r >> 11) + 0.5) / 2**53."""
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_M53


class RandomStream:
    """Deterministic uniform stream keyed by ``(seed, stream_index)``.

    Backed by the counter-based Philox4x64 generator; the key is derived
    from ``SeedSequence(seed, spawn_key=(stream_index,))`` so distinct
    indices give statistically independent substreams.
    """

    def __init__(self, seed: int, stream_index: int = 0):
        if seed < 0 or stream_index < 0:
            raise ValueError("seed and stream_index must be non-negative")
        self.seed = int(seed)
        self.stream_index = int(stream_index)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_index,))
        self._bitgen = np.random.Philox(ss)

    def next_uniform(self) -> float:
        raw = np.uint64(self._bitgen.random_raw())
        return float(((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_M53)

    def uniforms(self, n: int) -> np.ndarray:
        return raw_to_uniform(self._bitgen.random_raw(n).astype(np.uint64))

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, stream_index={self.stream_index})"
