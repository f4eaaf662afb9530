"""Link-interruption probabilities, the mixed channel law and closed-form outage.

The Meijer-G forms of the channel density and outage probability reduce
exactly to a scaled Beta density and a regularized incomplete Beta function;
those reductions are what get evaluated here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .beta_mixture import BetaMixture, mixture_cdf, mixture_pdf
from .numerics import ln_gamma, reg_inc_beta, weibull_cdf
from .surface import AoAModel, IncidenceModel, RefractiveIndices, aoa_from_incidence, incidence_from_aoa


@dataclass(frozen=True)
class InterruptionProbs:
    p_tir: float
    p_cap: float
    p_int: float


@dataclass(frozen=True)
class ChannelModel:
    h_L: float
    A0: float
    mixture: BetaMixture
    interruption: InterruptionProbs

    @property
    def peak(self) -> float:
        """Upper end of the continuous support, h_L * A0."""
        return self.h_L * self.A0


class OutageEvaluation(NamedTuple):
    p_out: float
    valid: bool


def p_tir(incidence: IncidenceModel, theta_c: float) -> float:
    if not 0.0 <= theta_c < 90.0:
        raise ValueError("critical angle must lie in [0, 90) degrees")
    k, lam = incidence.params.shape, incidence.params.scale
    return math.exp(-((theta_c / lam) ** k))


def p_capture(aoa: AoAModel, theta_FoV: float) -> float:
    if theta_FoV < 0:
        raise ValueError("field of view must be non-negative")
    if math.isinf(theta_FoV):
        return 1.0
    k, lam = aoa.params.shape, aoa.params.scale
    return -math.expm1(-((theta_FoV / lam) ** k))


def p_interruption(incidence: IncidenceModel, aoa: AoAModel, theta_c: float, theta_FoV: float) -> InterruptionProbs:
    """TIR followed by the field-of-view gate, treated as sequential events."""
    pt = p_tir(incidence, theta_c)
    pc = p_capture(aoa, theta_FoV)
    # 1 - (1 - pt) pc, arranged so the TIR floor survives rounding
    miss = 0.0 if math.isinf(theta_FoV) else math.exp(-((theta_FoV / aoa.params.scale) ** aoa.params.shape))
    return InterruptionProbs(p_tir=pt, p_cap=pc, p_int=min(1.0, pt + (1.0 - pt) * miss))


def p_interruption_exact(incidence: IncidenceModel, theta_FoV: float,
                         indices: RefractiveIndices = RefractiveIndices()) -> InterruptionProbs:
    """Interruption probability of the exact Snell map, without the AoA Weibull step.

    The link survives iff theta_I <= min(theta_c, g^-1(theta_FoV)) where g is
    the incidence-to-arrival map, so only the incidence CDF is needed.
    """
    theta_c = indices.critical_angle
    pt = p_tir(incidence, theta_c)
    top = aoa_from_incidence(theta_c, indices)
    limit = theta_c if theta_FoV >= top else incidence_from_aoa(theta_FoV, indices)
    p_link = float(weibull_cdf(incidence.params, limit))
    p_cap = p_link / (1.0 - pt) if pt < 1.0 else 0.0
    return InterruptionProbs(p_tir=pt, p_cap=p_cap, p_int=1.0 - p_link)


def sample_interruption(theta_I: float, theta_A: Optional[float], theta_c: float, theta_FoV: float) -> int:
    """Interruption indicator h_A: 1 iff no TIR and the arrival angle is inside the FoV (closed edge)."""
    if theta_A is None or (isinstance(theta_A, float) and math.isnan(theta_A)):
        return 0
    return int(theta_I <= theta_c and abs(theta_A) <= theta_FoV)


# --- Meijer-G reductions --------------------------------------------------

def meijer_g_density_term(x, alpha: float, beta: float):
    """Gamma(a+b)/Gamma(a) * G^{1,0}_{1,1}(x | a+b-1 ; a-1) for 0 < x < 1.

    G^{1,0}_{1,1}(x | p ; q) = x^q (1-x)^(p-q-1) / Gamma(p-q), so the term is
    the Beta(alpha, beta) density.
    """
    x = np.asarray(x, dtype=float)
    log_g = (alpha - 1.0) * np.log(x) + (beta - 1.0) * np.log1p(-x) - ln_gamma(beta)
    return np.exp(ln_gamma(alpha + beta) - ln_gamma(alpha) + log_g)


def meijer_g_outage_term(x: float, alpha: float, beta: float) -> float:
    """Gamma(a+b)/Gamma(a) * x * G^{1,1}_{2,2}(x | 0, a+b-1 ; a-1, -1), which equals I_x(a, b)."""
    return reg_inc_beta(x, alpha, beta)


# --- channel law ----------------------------------------------------------

def channel_pdf_continuous(h, model: ChannelModel):
    """Density of h_L * h_P on (0, h_L * A0)."""
    ha = np.asarray(h, dtype=float)
    if np.any(ha <= 0) or np.any(ha >= model.peak):
        raise ValueError("h outside the open support (0, h_L*A0)")
    out = mixture_pdf(ha / model.peak, model.mixture) / model.peak
    return float(out) if np.ndim(h) == 0 else out


def channel_pdf(h, model: ChannelModel):
    """Continuous part of the mixed law: (1 - P_int) * f_c(h); the atom P_int sits at h = 0."""
    return (1.0 - model.interruption.p_int) * channel_pdf_continuous(h, model)


def evaluate_outage(h_th: float, model: ChannelModel) -> OutageEvaluation:
    """Outage probability with a validity flag (False when h_th exceeds h_L * A0)."""
    if not h_th >= 0:
        raise ValueError("threshold must be non-negative")
    if h_th > model.peak:
        return OutageEvaluation(1.0, False)
    x = min(h_th / model.peak, 1.0)
    p_int = model.interruption.p_int
    cont = float(mixture_cdf(x, model.mixture))
    return OutageEvaluation(p_int + (1.0 - p_int) * cont, True)


def outage_probability(h_th: float, model: ChannelModel) -> float:
    return evaluate_outage(h_th, model).p_out


def outage_probability_meijer(h_th: float, model: ChannelModel) -> float:
    """Outage written term by term through :func:`meijer_g_outage_term` (scalar path)."""
    if not 0.0 <= h_th <= model.peak:
        raise ValueError("threshold outside [0, h_L*A0]")
    x = h_th / model.peak
    total = 0.0
    for w, c in zip(model.mixture.weights, model.mixture.components):
        if w > 0:
            total += w * meijer_g_outage_term(x, c.alpha, c.beta)
    p_int = model.interruption.p_int
    return p_int + (1.0 - p_int) * total
