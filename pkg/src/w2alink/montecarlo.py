"""Exact channel sampler and the empirical statistics used to validate the closed forms.

Trials are drawn in fixed blocks of ``BLOCK_SIZE``; block ``j`` always uses
``RandomStream(seed, j)``. Results are therefore identical for any worker
count.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .beta_mixture import EMConfig, EMResult, em_fit, mixture_cdf, mixture_pdf
from .numerics import IntegrationError, RandomStream, integrate, weibull_cdf, weibull_pdf
from .outage import sample_interruption
from .pointing import LinkGeometry
from .scenario import Environment, Scenario, build_scenario
from .surface import WeibullFit, fit_weibull_mle, snell_refract

BLOCK_SIZE = 8192
DEFAULT_TRIALS = 200_000
HIST_BINS = 100


@dataclass(frozen=True)
class ChannelSample:
    theta_I: float
    theta_T: Optional[float]
    theta_A: Optional[float]
    r_d: Optional[float]
    h_P: float
    h_A: int
    h: float

    @property
    def tir(self) -> bool:
        return self.theta_T is None


def evaluate_channel(theta_I: float, scn: Scenario) -> ChannelSample:
    """Deterministic channel state for a given incidence angle."""
    n = scn.env.indices
    theta_T = snell_refract(theta_I, n) if theta_I < 90 else None
    if theta_T is None:
        return ChannelSample(theta_I, None, None, None, 0.0, 0, 0.0)
    theta_A = max(theta_T - theta_I, 0.0)
    r_d = scn.geom.z_a * math.tan(math.radians(theta_A))
    h_P = scn.beam.A0 * math.exp(-2.0 * r_d * r_d / scn.beam.omega_Leq ** 2)
    h_A = sample_interruption(theta_I, theta_A, scn.theta_c, scn.geom.theta_FoV)
    return ChannelSample(theta_I, theta_T, theta_A, r_d, h_P, h_A, scn.h_L * h_P * h_A)


def sample_channel(geom: LinkGeometry, env: Environment, stream, scn: Optional[Scenario] = None) -> ChannelSample:
    """One exact draw: Weibull incidence (inverse CDF), Snell, FoV gate, pointing loss."""
    scn = scn or build_scenario(geom, env)
    k, lam = scn.incidence.params.shape, scn.incidence.params.scale
    u = stream.next_uniform()
    theta_I = lam * (-math.log1p(-u)) ** (1.0 / k)
    return evaluate_channel(theta_I, scn)


@dataclass
class ChannelBatch:
    """Arrays of exact channel draws for one scenario (TIR rows carry NaN angles)."""

    scenario: Scenario
    theta_I: np.ndarray
    theta_A: np.ndarray
    r_d: np.ndarray
    h_P: np.ndarray
    h_A: np.ndarray
    h: np.ndarray

    @property
    def n(self) -> int:
        return int(self.theta_I.size)

    @property
    def tir(self) -> np.ndarray:
        return np.isnan(self.theta_A)

    @property
    def linked(self) -> np.ndarray:
        return self.h_A == 1

    def h_PN(self) -> np.ndarray:
        """Normalized pointing loss of the non-interrupted draws."""
        return self.h_P[self.linked] / self.scenario.beam.A0

    def with_fov(self, theta_FoV: float) -> "ChannelBatch":
        """Re-gate the same draws with another field of view."""
        geom = self.scenario.geom
        scn = build_scenario(
            LinkGeometry(geom.z_w, geom.z_a, geom.theta_0, geom.D_r, theta_FoV, geom.wavelength),
            self.scenario.env,
        )
        with np.errstate(invalid="ignore"):
            h_A = (~self.tir & (self.theta_A <= theta_FoV)).astype(np.int8)
        return ChannelBatch(scn, self.theta_I, self.theta_A, self.r_d, self.h_P, h_A, scn.h_L * self.h_P * h_A)


def kernel_args(scn: Scenario) -> tuple:
    p = scn.incidence.params
    return (p.shape, p.scale, scn.env.indices.ratio, scn.theta_c, scn.geom.theta_FoV,
            scn.geom.z_a, scn.beam.A0, 1.0 / scn.beam.omega_Leq ** 2, scn.h_L)


def _run_block(job):
    seed, block, size, args = job
    u = RandomStream(seed, block).uniforms(size)
    return kernels.channel_batch(u, *args)


def simulate(scn: Scenario, n_trials: int, seed: int, workers: int = 1) -> ChannelBatch:
    if n_trials < 1:
        raise ValueError("n_trials must be positive")
    args = kernel_args(scn)
    jobs = []
    for block, start in enumerate(range(0, n_trials, BLOCK_SIZE)):
        jobs.append((seed, block, min(BLOCK_SIZE, n_trials - start), args))
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_block, jobs))
    else:
        parts = [_run_block(job) for job in jobs]
    cols = [np.concatenate([p[i] for p in parts]) for i in range(6)]
    return ChannelBatch(scn, *cols)


# --- empirical statistics -------------------------------------------------

@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    n: int

    @classmethod
    def from_samples(cls, samples, lo: float, hi: float, bins: int = HIST_BINS) -> "Histogram":
        samples = np.asarray(samples, dtype=float)
        edges = np.linspace(lo, hi, bins + 1)
        counts, _ = np.histogram(samples, bins=edges)
        return cls(edges, counts, int(samples.size))

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def density(self) -> np.ndarray:
        return self.counts / (self.n * self.widths)

    @property
    def mass(self) -> float:
        return float(np.sum(self.density * self.widths))


@dataclass(frozen=True)
class FitMetrics:
    mse: float
    r2: float
    ks: float


def fit_metrics(hist: Histogram, analytic_pdf, analytic_cdf=None) -> FitMetrics:
    """MSE and R^2 of bin densities against the model at bin centres, plus a binned KS distance.

    Without ``analytic_cdf`` the model CDF at the bin edges is built by
    integrating the density bin by bin.
    """
    if hist.counts.size < 10:
        raise ValueError("need at least 10 bins")
    if np.count_nonzero(hist.counts) < 2:
        raise ValueError("degenerate histogram: a single bin is occupied")
    dens = hist.density
    model = np.asarray(analytic_pdf(hist.centers), dtype=float)
    resid = dens - model
    mse = float(np.mean(resid ** 2))
    ss_tot = float(np.sum((dens - dens.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot
    emp_cdf = np.concatenate([[0.0], np.cumsum(hist.counts) / hist.n])
    if analytic_cdf is not None:
        model_cdf = np.asarray(analytic_cdf(hist.edges), dtype=float)
        model_cdf = model_cdf - model_cdf[0]
    else:
        pieces = []
        for a, b in zip(hist.edges[:-1], hist.edges[1:]):
            try:
                pieces.append(integrate(lambda t: float(analytic_pdf(np.array([t]))[0]), a, b, tol=1e-9))
            except IntegrationError as exc:
                pieces.append(exc.estimate)
        model_cdf = np.concatenate([[0.0], np.cumsum(pieces)])
    ks = float(np.max(np.abs(emp_cdf - model_cdf)))
    return FitMetrics(mse, r2, ks)


def ks_distance(samples, cdf) -> float:
    """Exact two-sided Kolmogorov-Smirnov distance between samples and a model CDF."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    F = np.asarray(cdf(x), dtype=float)
    upper = np.arange(1, n + 1) / n - F
    lower = F - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))


def binomial_stderr(p: float, n: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / n)


@dataclass
class SimulationReport:
    n_trials: int
    seed: int
    scenario: Scenario
    n_tir: int
    n_fov_excluded: int
    n_linked: int
    empirical_interruption: float
    interruption_stderr: float
    h_th: Optional[float]
    empirical_outage: Optional[float]
    stderr: Optional[float]
    histograms: dict
    aoa_fit: Optional[WeibullFit]
    aoa_regression_metrics: Optional[FitMetrics]
    bmm: Optional[EMResult]
    bmm_metrics: Optional[FitMetrics]
    batch: ChannelBatch = field(repr=False, default=None)

    @property
    def empirical_tir(self) -> float:
        return self.n_tir / self.n_trials

    def to_dict(self) -> dict:
        scn = self.scenario
        doc = {
            "n_trials": self.n_trials,
            "seed": self.seed,
            "derived": {
                "theta_c_deg": scn.theta_c,
                "k_U": scn.incidence.params.shape,
                "lambda_U_deg": scn.incidence.params.scale,
                "k_A": scn.aoa.params.shape,
                "lambda_A_deg": scn.aoa.params.scale,
                "omega_L_m": scn.beam.omega_L,
                "omega_Leq_m": scn.beam.omega_Leq,
                "A0": scn.beam.A0,
                "h_L": scn.h_L,
            },
            "counts": {"tir": self.n_tir, "fov_excluded": self.n_fov_excluded, "linked": self.n_linked},
            "empirical": {
                "p_tir": self.empirical_tir,
                "p_int": self.empirical_interruption,
                "p_int_stderr": self.interruption_stderr,
                "h_th": self.h_th,
                "p_out": self.empirical_outage,
                "p_out_stderr": self.stderr,
            },
        }
        if self.aoa_fit is not None:
            doc["aoa_fit"] = {
                "shape": self.aoa_fit.params.shape,
                "scale_deg": self.aoa_fit.params.scale,
                "mse": self.aoa_fit.mse,
                "r2": self.aoa_fit.r2,
                "iterations": self.aoa_fit.iterations,
            }
        if self.aoa_regression_metrics is not None:
            m = self.aoa_regression_metrics
            doc["aoa_vs_regression"] = {"mse": m.mse, "r2": m.r2, "ks": m.ks}
        if self.bmm is not None:
            doc["bmm"] = self.bmm.mixture.to_record(
                loglik=self.bmm.loglik,
                n_samples=self.bmm.n_samples,
                iterations=self.bmm.iterations,
                converged=self.bmm.converged,
                collapsed=self.bmm.collapsed,
                monotone=self.bmm.monotone,
                responsibilities=self.bmm.responsibility_summary,
            )
        if self.bmm_metrics is not None:
            m = self.bmm_metrics
            doc["bmm_fit"] = {"mse": m.mse, "r2": m.r2, "ks": m.ks}
        return doc


def empirical_histograms(batch: ChannelBatch, bins: int = HIST_BINS) -> dict:
    scn = batch.scenario
    tc = scn.theta_c
    not_tir = ~batch.tir
    linked = batch.linked
    return {
        "theta_I": Histogram.from_samples(batch.theta_I[not_tir], 0.0, tc, bins),
        "theta_A": Histogram.from_samples(batch.theta_A[not_tir], 0.0, tc, bins),
        "h_PN": Histogram.from_samples(batch.h_PN(), 0.0, 1.0, bins),
        "h": Histogram.from_samples(batch.h[linked], 0.0, scn.peak, bins),
    }


def aoa_regression_metrics(theta_A: np.ndarray, scn: Scenario, bins: int = HIST_BINS) -> FitMetrics:
    """Histogram (100 bins on [0, max]) of arrival angles against the wind-regression Weibull law."""
    hist = Histogram.from_samples(theta_A, 0.0, float(theta_A.max()), bins)
    params = scn.aoa.params
    return fit_metrics(hist, lambda t: weibull_pdf(params, t), lambda t: weibull_cdf(params, t))


def fit_pointing_mixture(h_PN, em_cfg: EMConfig = EMConfig()) -> tuple[EMResult, FitMetrics]:
    """EM fit of normalized pointing loss; binned MSE/R2 plus the exact KS distance."""
    fit = em_fit(h_PN, em_cfg)
    mix = fit.mixture
    hist = Histogram.from_samples(h_PN, 0.0, 1.0)
    binned = fit_metrics(hist, lambda t: mixture_pdf(t, mix), lambda t: mixture_cdf(t, mix))
    return fit, FitMetrics(binned.mse, binned.r2, ks_distance(h_PN, lambda t: mixture_cdf(t, mix)))


def run_simulation(geom: LinkGeometry, env: Environment, n_trials: int = DEFAULT_TRIALS, seed: int = 0,
                   h_th: Optional[float] = None, workers: int = 1, em_cfg: EMConfig = EMConfig(),
                   fits: bool = True) -> SimulationReport:
    if n_trials < 1000:
        raise ValueError(f"n_trials must be at least 1000, got {n_trials}")
    scn = build_scenario(geom, env)
    batch = simulate(scn, n_trials, seed, workers)
    n = batch.n
    n_tir = int(batch.tir.sum())
    n_linked = int(batch.linked.sum())
    p_int = 1.0 - n_linked / n
    emp_out = stderr = None
    if h_th is not None:
        emp_out = float(np.mean(batch.h <= h_th))
        stderr = binomial_stderr(emp_out, n)

    aoa_fit = aoa_reg = bmm = bmm_metrics = None
    if fits:
        theta_A = batch.theta_A[~batch.tir]
        aoa_fit = fit_weibull_mle(theta_A)
        aoa_reg = aoa_regression_metrics(theta_A, scn)
        hpn = batch.h_PN()
        if hpn.size >= 500:
            bmm, bmm_metrics = fit_pointing_mixture(hpn, em_cfg)

    return SimulationReport(
        n_trials=n,
        seed=seed,
        scenario=scn,
        n_tir=n_tir,
        n_fov_excluded=n - n_tir - n_linked,
        n_linked=n_linked,
        empirical_interruption=p_int,
        interruption_stderr=binomial_stderr(p_int, n),
        h_th=h_th,
        empirical_outage=emp_out,
        stderr=stderr,
        histograms=empirical_histograms(batch),
        aoa_fit=aoa_fit,
        aoa_regression_metrics=aoa_reg,
        bmm=bmm,
        bmm_metrics=bmm_metrics,
        batch=batch,
    )
