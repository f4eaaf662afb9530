"""Beam footprint at the receiver and pointing-error loss.

Lengths are in metres, beam divergence in radians, arrival angles in degrees.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import erf, weibull_pdf
from .surface import AoAModel

_DEG = math.pi / 180.0
_TINY_DENSITY = 1e-300


@dataclass(frozen=True)
class LinkGeometry:
    """Vertical link: transmitter at depth ``z_w`` below a hovering receiver at ``z_a``."""

    z_w: float = 10.0
    z_a: float = 5.0
    theta_0: float = 0.05
    D_r: float = 0.075
    theta_FoV: float = 30.0
    wavelength: float = 450.0

    def __post_init__(self):
        for name in ("z_w", "z_a", "theta_0", "D_r", "theta_FoV", "wavelength"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive and finite, got {value}")
        if self.theta_0 >= math.pi / 2:
            raise ValueError("theta_0 must be below pi/2")

    @property
    def distance(self) -> float:
        return self.z_w + self.z_a


@dataclass(frozen=True)
class BeamAtReceiver:
    omega_L: float
    v: float
    A0: float
    omega_Leq: float


def beam_at_receiver(geom: LinkGeometry) -> BeamAtReceiver:
    omega_L = geom.distance * math.tan(geom.theta_0)
    v = geom.D_r * math.sqrt(math.pi) / (2.0 * math.sqrt(2.0) * omega_L)
    erf_v = erf(v)
    A0 = erf_v * erf_v
    # sqrt(pi) erf(v) / (2 v exp(-v^2)) written with exp(+v^2) to avoid 0 * inf at large v
    factor = math.sqrt(math.pi) * erf_v * math.exp(v * v) / (2.0 * v) if v < 26.0 else math.inf
    return BeamAtReceiver(omega_L=omega_L, v=v, A0=A0, omega_Leq=omega_L * math.sqrt(factor))


def pointing_loss(r_d, beam: BeamAtReceiver):
    """Collected power fraction at radial displacement ``r_d`` (Gaussian approximation)."""
    r = np.asarray(r_d, dtype=float)
    if np.any(r < 0):
        raise ValueError("radial displacement must be non-negative")
    out = beam.A0 * np.exp(-2.0 * r * r / beam.omega_Leq ** 2)
    return float(out) if np.ndim(r_d) == 0 else out


def radial_displacement(theta_A, z_a: float):
    theta = np.asarray(theta_A, dtype=float)
    if np.any(theta < 0) or np.any(theta >= 90):
        raise ValueError("angle of arrival must lie in [0, 90) degrees")
    out = z_a * np.tan(theta * _DEG)
    return float(out) if np.ndim(theta_A) == 0 else out


def pdf_radial(r_d, aoa: AoAModel, z_a: float):
    """Density of the radial displacement (per metre) implied by the AoA Weibull law.

    The Weibull law is over degrees, so the Jacobian carries 180/pi.
    """
    r = np.asarray(r_d, dtype=float)
    if np.any(r < 0):
        raise ValueError("radial displacement must be non-negative")
    theta = np.arctan(r / z_a) / _DEG
    jac = (z_a / (z_a * z_a + r * r)) / _DEG
    out = weibull_pdf(aoa.params, theta) * jac
    return float(out) if np.ndim(r_d) == 0 else out


def pdf_pointing_loss(h_P, beam: BeamAtReceiver, aoa: AoAModel, z_a: float):
    """Exact density of the pointing loss on (0, A0], via the r_d -> h_P change of variables.

    Computed in log space; values below 1e-300 are returned as 0. The density
    diverges at h_P = A0 whenever the AoA shape is below 2.
    """
    h = np.asarray(h_P, dtype=float)
    if np.any(h <= 0) or np.any(h > beam.A0 * (1 + 1e-15)):
        raise ValueError("pointing loss must lie in (0, A0]")
    weq2 = beam.omega_Leq ** 2
    log_ratio = np.minimum(np.log(h) - math.log(beam.A0), 0.0)
    r = np.sqrt(-0.5 * weq2 * log_ratio)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_fr = np.log(pdf_radial(r, aoa, z_a))
        log_density = math.log(weq2 / 4.0) - np.log(h) - np.log(r) + log_fr
    out = np.exp(log_density)
    out = np.where(log_density < math.log(_TINY_DENSITY), 0.0, out)
    # at r_d = 0 the density is f_r(r)/r in the limit r -> 0
    k = aoa.params.shape
    at_peak = r == 0.0
    if np.any(at_peak):
        lam = aoa.params.scale
        k2_limit = weq2 / (4.0 * beam.A0) * (2.0 / lam ** 2) / (z_a * _DEG) ** 2
        out = np.where(at_peak, np.inf if k < 2 else (0.0 if k > 2 else k2_limit), out)
    return float(out) if np.ndim(h_P) == 0 else out
