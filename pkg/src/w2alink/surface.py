"""Sea-surface incidence statistics, Snell refraction and the angle-of-arrival model.

All angles are in degrees; the wind regressions are degree-valued.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .numerics import RandomStream, WeibullParams, weibull_pdf, weibull_quantile

WIND_RANGE = (6.0, 15.0)

# wind regressions, U in m/s, angles in degrees
K_U_INTERCEPT, K_U_SLOPE = 1.7454, 0.0071
LAMBDA_U_INTERCEPT, LAMBDA_U_SLOPE = 13.6485, 0.2406
K_A = 1.60
LAMBDA_A_INTERCEPT, LAMBDA_A_SLOPE = 4.7473, 0.0957

HIST_BINS = 100
MLE_MAX_ITER = 200


class FitError(RuntimeError):
    """Weibull maximum-likelihood fit failed (degenerate data or no convergence)."""


class WindRangeWarning(UserWarning):
    """Wind speed outside the range the regressions were fitted on."""


@dataclass(frozen=True)
class RefractiveIndices:
    n_water: float = 1.33
    n_air: float = 1.0

    def __post_init__(self):
        if not self.n_water > self.n_air > 0:
            raise ValueError("refractive indices must satisfy n_water > n_air > 0")

    @property
    def ratio(self) -> float:
        return self.n_water / self.n_air

    @property
    def critical_angle(self) -> float:
        """Incidence angle (deg) beyond which total internal reflection occurs."""
        return math.degrees(math.asin(self.n_air / self.n_water))


@dataclass(frozen=True)
class IncidenceModel:
    wind_speed: float
    params: WeibullParams


@dataclass(frozen=True)
class AoAModel:
    wind_speed: float
    params: WeibullParams
    critical_angle: float


def _check_wind(U: float) -> None:
    lo, hi = WIND_RANGE
    if not lo <= U <= hi:
        warnings.warn(
            f"wind speed {U} m/s is outside the regression range [{lo}, {hi}] m/s",
            WindRangeWarning,
            stacklevel=3,
        )


def incidence_model_for_wind(U: float) -> IncidenceModel:
    """Weibull incidence-angle law for wind speed ``U`` (m/s)."""
    _check_wind(U)
    return IncidenceModel(
        wind_speed=U,
        params=WeibullParams(K_U_INTERCEPT + K_U_SLOPE * U, LAMBDA_U_INTERCEPT + LAMBDA_U_SLOPE * U),
    )


def aoa_model_for_wind(U: float, indices: RefractiveIndices = RefractiveIndices()) -> AoAModel:
    """Weibull angle-of-arrival approximation (shape fixed at 1.60) for wind speed ``U``."""
    _check_wind(U)
    return AoAModel(
        wind_speed=U,
        params=WeibullParams(K_A, LAMBDA_A_INTERCEPT + LAMBDA_A_SLOPE * U),
        critical_angle=indices.critical_angle,
    )


def _check_incidence(theta_I: float) -> None:
    if not 0.0 <= theta_I < 90.0:
        raise ValueError(f"incidence angle must lie in [0, 90) degrees, got {theta_I}")


def snell_refract(theta_I: float, n: RefractiveIndices = RefractiveIndices()) -> Optional[float]:
    """Transmission angle into air, or ``None`` under total internal reflection."""
    _check_incidence(theta_I)
    if theta_I > n.critical_angle:
        return None
    s = min(n.ratio * math.sin(math.radians(theta_I)), 1.0)
    return math.degrees(math.asin(s))


def aoa_from_incidence(theta_I: float, n: RefractiveIndices = RefractiveIndices()) -> Optional[float]:
    """Deviation of the refracted beam from the vertical; ``None`` under TIR."""
    theta_T = snell_refract(theta_I, n)
    if theta_T is None:
        return None
    # rounding can leave -1 ulp for tiny angles
    return max(theta_T - theta_I, 0.0)


def incidence_from_aoa(theta_A: float, n: RefractiveIndices = RefractiveIndices()) -> float:
    """Invert :func:`aoa_from_incidence` by bracketed root finding.

    Valid for ``0 <= theta_A <= 90 - theta_c``, the image of [0, theta_c].
    """
    theta_c = n.critical_angle
    top = 90.0 - theta_c
    if not 0.0 <= theta_A <= top:
        raise ValueError(f"angle of arrival {theta_A} outside the refraction image [0, {top}]")
    if theta_A == 0.0:
        return 0.0
    if theta_A == top:
        return theta_c
    return brentq(lambda t: aoa_from_incidence(t, n) - theta_A, 0.0, theta_c, xtol=1e-13, rtol=1e-15)


def sample_incidence(model: IncidenceModel, stream: RandomStream) -> float:
    """One inverse-CDF draw of the incidence angle."""
    return weibull_quantile(model.params, stream.next_uniform())


def sample_incidence_batch(model: IncidenceModel, stream: RandomStream, n: int) -> np.ndarray:
    return weibull_quantile(model.params, stream.uniforms(n))


@dataclass(frozen=True)
class WeibullFit:
    params: WeibullParams
    mse: float
    r2: float
    iterations: int
    n_samples: int


def histogram_density(samples, bins: int = HIST_BINS, upper: Optional[float] = None):
    """Equal-width density histogram on [0, upper] (default: sample maximum).

    Returns ``(edges, density)`` with density normalized by bin width.
    """
    samples = np.asarray(samples, dtype=float)
    hi = float(samples.max()) if upper is None else float(upper)
    edges = np.linspace(0.0, hi, bins + 1)
    counts, _ = np.histogram(samples, bins=edges)
    density = counts / (samples.size * np.diff(edges))
    return edges, density


def _profile_score(k, y, mean_log):
    # d/dk of the profile log-likelihood, with y = ln x - max ln x for stability
    w = np.exp(k * y)
    sw = w.sum()
    swy = np.dot(w, y)
    swyy = np.dot(w, y * y)
    g = swy / sw - 1.0 / k - mean_log
    dg = (swyy * sw - swy * swy) / (sw * sw) + 1.0 / (k * k)
    return g, dg


def fit_weibull_mle(samples, bins: int = HIST_BINS) -> WeibullFit:
    """Maximum-likelihood Weibull fit plus histogram MSE / R^2 against the fitted density.

    The shape solves the profile-likelihood equation by Newton steps with a
    bisection safeguard; the scale follows in closed form.
    """
    x = np.asarray(samples, dtype=float)
    if x.size < 100:
        raise ValueError(f"need at least 100 samples, got {x.size}")
    if np.any(~np.isfinite(x)) or np.any(x <= 0):
        raise ValueError("Weibull fit requires finite positive samples")
    lx = np.log(x)
    if np.ptp(lx) == 0.0:
        raise FitError("degenerate sample: zero variance")
    lmax = lx.max()
    y = lx - lmax
    mean_log = float(y.mean())

    lo, hi = 1e-3, 1.0
    while _profile_score(hi, y, mean_log)[0] < 0:
        lo, hi = hi, hi * 2.0
        if hi > 1e6:
            raise FitError("shape bracket expansion failed")
    k = 0.5 * (lo + hi)
    for it in range(1, MLE_MAX_ITER + 1):
        g, dg = _profile_score(k, y, mean_log)
        if g > 0:
            hi = k
        else:
            lo = k
        step = k - g / dg
        k_new = step if lo < step < hi else 0.5 * (lo + hi)
        if abs(k_new - k) <= 1e-12 * k:
            k = k_new
            break
        k = k_new
    else:
        raise FitError(f"shape root-find did not converge in {MLE_MAX_ITER} iterations")

    scale = math.exp(lmax) * float(np.mean(np.exp(k * y))) ** (1.0 / k)
    params = WeibullParams(k, scale)
    edges, density = histogram_density(x, bins)
    centers = 0.5 * (edges[1:] + edges[:-1])
    model = weibull_pdf(params, centers)
    resid = density - model
    mse = float(np.mean(resid ** 2))
    ss_tot = float(np.sum((density - density.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else float("nan")
    return WeibullFit(params, mse, r2, it, int(x.size))
