"""Environment description and the derived, precomputed link scenario."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .beta_mixture import BetaMixture
from .numerics import WeibullParams
from .outage import ChannelModel, p_interruption
from .path_loss import BubbleModel, WaterOptics, path_loss
from .pointing import BeamAtReceiver, LinkGeometry, beam_at_receiver
from .surface import (AoAModel, IncidenceModel, RefractiveIndices, aoa_model_for_wind,
                      incidence_model_for_wind)


@dataclass(frozen=True)
class Environment:
    wind_speed: float = 10.0
    water: WaterOptics = field(default_factory=WaterOptics)
    indices: RefractiveIndices = field(default_factory=RefractiveIndices)
    freeze_r_ref: bool = False

    @property
    def bubbles(self) -> BubbleModel:
        return BubbleModel(wind_speed=self.wind_speed, freeze_r_ref=self.freeze_r_ref)


@dataclass(frozen=True)
class Scenario:
    """Everything deterministic about one (geometry, environment) pair."""

    geom: LinkGeometry
    env: Environment
    incidence: IncidenceModel
    aoa: AoAModel
    beam: BeamAtReceiver
    h_L: float

    @property
    def theta_c(self) -> float:
        return self.env.indices.critical_angle

    @property
    def peak(self) -> float:
        return self.h_L * self.beam.A0


def build_scenario(geom: LinkGeometry, env: Environment) -> Scenario:
    return Scenario(
        geom=geom,
        env=env,
        incidence=incidence_model_for_wind(env.wind_speed),
        aoa=aoa_model_for_wind(env.wind_speed, env.indices),
        beam=beam_at_receiver(geom),
        h_L=path_loss(geom, env.water, env.bubbles),
    )


def build_channel_model(scn: Scenario, mixture: BetaMixture,
                        aoa_params: Optional[WeibullParams] = None) -> ChannelModel:
    """Closed-form channel law for a scenario.

    The capture probability uses the wind-regression AoA model unless
    ``aoa_params`` (e.g. a per-run Weibull fit) is supplied.
    """
    aoa = scn.aoa if aoa_params is None else AoAModel(scn.aoa.wind_speed, aoa_params, scn.aoa.critical_angle)
    probs = p_interruption(scn.incidence, aoa, scn.theta_c, scn.geom.theta_FoV)
    return ChannelModel(h_L=scn.h_L, A0=scn.beam.A0, mixture=mixture, interruption=probs)
