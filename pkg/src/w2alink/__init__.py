"""Statistical model of the wind-driven water-to-air optical channel."""
from .beta_mixture import BetaComponent, BetaMixture, EMConfig, em_fit, mixture_cdf, mixture_pdf
from .kernels import BACKEND
from .montecarlo import ChannelSample, run_simulation, sample_channel, simulate
from .numerics import RandomStream, WeibullParams
from .outage import (ChannelModel, InterruptionProbs, outage_probability, p_capture, p_interruption,
                     p_tir)
from .path_loss import BubbleModel, WaterOptics, path_loss
from .pointing import LinkGeometry, beam_at_receiver
from .scenario import Environment, build_channel_model, build_scenario
from .surface import RefractiveIndices, aoa_model_for_wind, incidence_model_for_wind

__all__ = [
    "BetaComponent",
    "BetaMixture",
    "EMConfig",
    "em_fit",
    "mixture_cdf",
    "mixture_pdf",
    "BACKEND",
    "ChannelSample",
    "run_simulation",
    "sample_channel",
    "simulate",
    "RandomStream",
    "WeibullParams",
    "ChannelModel",
    "InterruptionProbs",
    "outage_probability",
    "p_capture",
    "p_tir",
    "p_interruption",
    "BubbleModel",
    "WaterOptics",
    "path_loss",
    "LinkGeometry",
    "beam_at_receiver",
    "Environment",
    "build_channel_model",
    "build_scenario",
    "RefractiveIndices",
    "aoa_model_for_wind",
    "incidence_model_for_wind",
]

__version__ = "0.1.0"
