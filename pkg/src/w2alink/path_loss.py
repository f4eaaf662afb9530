"""Underwater path loss with a wind-driven near-surface bubble layer.

Attenuation is integrated over the underwater segment only; the in-air leg
is treated as lossless. Depth ``z`` is measured downward from the surface.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .numerics import integrate
from .pointing import LinkGeometry

BUBBLE_DENSITY_SCALE = 1.6e10
R_REF_SURFACE = 54.4e-6  # m
R_REF_GRADIENT = 1.984e-6  # m per m of depth


@dataclass(frozen=True)
class WaterOptics:
    """Absorption and scattering coefficients in 1/m (coastal water by default)."""

    absorption: float = 0.0088
    scattering: float = 0.216

    def __post_init__(self):
        if self.absorption < 0 or self.scattering < 0:
            raise ValueError("absorption and scattering must be non-negative")

    @property
    def extinction(self) -> float:
        return self.absorption + self.scattering


@dataclass(frozen=True)
class BubbleModel:
    wind_speed: float
    Q_sca: float = 2.0
    r_min: float = 1e-6
    freeze_r_ref: bool = False

    def __post_init__(self):
        if self.wind_speed < 0:
            raise ValueError("wind speed must be non-negative")
        if not (self.Q_sca > 0 and self.r_min > 0):
            raise ValueError("Q_sca and r_min must be positive")

    @property
    def cross_section(self) -> float:
        """Mean geometric cross-section 3*pi*r_min^2 (m^2)."""
        return 3.0 * math.pi * self.r_min ** 2


def efolding_depth(U: float) -> float:
    """Depth scale (m) of the bubble layer."""
    if U < 0:
        raise ValueError("wind speed must be non-negative")
    if U <= 7.5:
        return 0.4
    return 0.4 + 0.115 * (U - 7.5)


def reference_radius(z: float, model: BubbleModel) -> float:
    if model.freeze_r_ref:
        return R_REF_SURFACE
    return R_REF_SURFACE + R_REF_GRADIENT * z


def bubble_density(z: float, model: BubbleModel) -> float:
    """Bubble number density (1/m^3) at depth ``z``."""
    if z < 0:
        raise ValueError("depth must be non-negative")
    U = model.wind_speed
    if U == 0:
        return 0.0
    r_ref = reference_radius(z, model)
    return (BUBBLE_DENSITY_SCALE * r_ref ** 4 / (3.0 * model.r_min ** 3)
            * (U / 13.0) ** 3 * math.exp(-z / efolding_depth(U)))


def bubble_scattering(z: float, model: BubbleModel) -> float:
    """Bubble-induced scattering coefficient (1/m) at depth ``z``."""
    return model.Q_sca * model.cross_section * bubble_density(z, model)


def bubble_optical_depth(z_w: float, model: BubbleModel, tol: float = 1e-10) -> float:
    """Integral of the bubble scattering coefficient from the surface down to ``z_w``."""
    if z_w < 0:
        raise ValueError("depth must be non-negative")
    if model.wind_speed == 0 or z_w == 0:
        return 0.0
    L = efolding_depth(model.wind_speed)
    # the integrand decays on the e-folding scale; give the quadrature that breakpoint
    points = [p for p in (L, 5 * L, 20 * L) if p < z_w]
    return integrate(lambda z: bubble_scattering(z, model), 0.0, z_w, tol=tol, points=points or None)


def path_loss(geom: LinkGeometry, water: WaterOptics, bubbles: BubbleModel) -> float:
    """Deterministic underwater transmittance h_L in (0, 1]."""
    tau = water.extinction * geom.z_w + bubble_optical_depth(geom.z_w, bubbles)
    return math.exp(-tau)
