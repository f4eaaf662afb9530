"""Two-component Beta mixture for the normalized pointing loss, fitted by EM."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .numerics import digamma, ln_beta, trigamma

COLLAPSE_WEIGHT = 1e-6
MSTEP_MAX_ITER = 50
SHAPE_CAP = 1e4
REDUNDANT_GAIN_PER_PARAM = 0.5  # BIC penalty, in nats per parameter per log(n)


@dataclass(frozen=True)
class BetaComponent:
    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError(f"Beta shapes must be positive, got ({self.alpha}, {self.beta})")
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise ValueError("Beta shapes must be finite")

    @property
    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)


@dataclass(frozen=True)
class BetaMixture:
    """``w1 * Beta(c1) + (1 - w1) * Beta(c2)``; the second weight is always the complement."""

    w1: float
    c1: BetaComponent
    c2: BetaComponent

    def __post_init__(self):
        if not 0.0 <= self.w1 <= 1.0:
            raise ValueError(f"mixture weight must lie in [0, 1], got {self.w1}")

    @property
    def weights(self) -> tuple[float, float]:
        return self.w1, 1.0 - self.w1

    @property
    def components(self) -> tuple[BetaComponent, BetaComponent]:
        return self.c1, self.c2

    def canonical(self) -> "BetaMixture":
        """Same mixture with the smaller-mean component first."""
        if self.c2.mean < self.c1.mean:
            return BetaMixture(1.0 - self.w1, self.c2, self.c1)
        return self

    def to_record(self, **extra) -> dict:
        rec = {
            "w1": self.w1,
            "alpha1": self.c1.alpha,
            "beta1": self.c1.beta,
            "alpha2": self.c2.alpha,
            "beta2": self.c2.beta,
        }
        rec.update(extra)
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "BetaMixture":
        try:
            return cls(
                float(rec["w1"]),
                BetaComponent(float(rec["alpha1"]), float(rec["beta1"])),
                BetaComponent(float(rec["alpha2"]), float(rec["beta2"])),
            )
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed mixture record: {exc}") from exc


RECORD_FIELDS = ("w1", "alpha1", "beta1", "alpha2", "beta2", "loglik", "n_samples", "wind_speed", "z_a", "z_w")


def dump_records(records: list[dict]) -> str:
    return json.dumps({"mixtures": records}, indent=2, sort_keys=False) + "\n"


def load_records(text: str) -> list[dict]:
    doc = json.loads(text)
    recs = doc["mixtures"] if isinstance(doc, dict) and "mixtures" in doc else doc
    if isinstance(recs, dict):
        recs = [recs]
    return list(recs)


def _check_unit(x):
    if np.any(np.isnan(x)) or np.any(x < 0) or np.any(x > 1):
        raise ValueError("argument must lie in [0, 1]")


def _beta_pdf(x, c: BetaComponent):
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = (c.alpha - 1.0) * np.log(x) + (c.beta - 1.0) * np.log1p(-x) - ln_beta(c.alpha, c.beta)
        out = np.exp(logp)
    # boundary values: the 0 * (-inf) cases of alpha == 1 or beta == 1
    if c.alpha == 1.0:
        out = np.where(x == 0, math.exp(-ln_beta(1.0, c.beta)), out)
    if c.beta == 1.0:
        out = np.where(x == 1, math.exp(-ln_beta(c.alpha, 1.0)), out)
    return out


def mixture_pdf(x, m: BetaMixture):
    xa = np.asarray(x, dtype=float)
    _check_unit(xa)
    w1, w2 = m.weights
    out = np.zeros_like(xa)
    if w1 > 0:
        out = out + w1 * _beta_pdf(xa, m.c1)
    if w2 > 0:
        out = out + w2 * _beta_pdf(xa, m.c2)
    return float(out) if np.ndim(x) == 0 else out


def mixture_cdf(x, m: BetaMixture):
    xa = np.asarray(x, dtype=float)
    _check_unit(xa)
    flat = np.atleast_1d(xa).ravel()
    w1, w2 = m.weights
    out = np.zeros_like(flat)
    if w1 > 0:
        out = out + w1 * kernels.betainc(flat, m.c1.alpha, m.c1.beta)
    if w2 > 0:
        out = out + w2 * kernels.betainc(flat, m.c2.alpha, m.c2.beta)
    out = np.minimum(out, 1.0)
    return float(out[0]) if np.ndim(x) == 0 else out.reshape(xa.shape)


@dataclass(frozen=True)
class EMConfig:
    max_iters: int = 500
    loglik_tol: float = 1e-8
    clamp_eps: float = 1e-9
    seed: int = 0  # initialization is deterministic; kept for record provenance

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.loglik_tol > 0:
            raise ValueError("loglik_tol must be > 0")
        if not 0 < self.clamp_eps < 0.5:
            raise ValueError("clamp_eps must lie in (0, 0.5)")


@dataclass
class EMResult:
    mixture: BetaMixture
    loglik: float
    iterations: int
    converged: bool
    collapsed: bool
    n_samples: int
    loglik_trace: list[float] = field(default_factory=list)
    responsibility_summary: dict = field(default_factory=dict)

    @property
    def monotone(self) -> bool:
        tr = self.loglik_trace
        return all(b - a >= -1e-9 * max(1.0, abs(a)) for a, b in zip(tr, tr[1:]))


def _moments_init(x: np.ndarray) -> BetaComponent:
    m = float(x.mean())
    v = float(x.var())
    if v <= 0 or not 0 < m < 1:
        return BetaComponent(1.0, 1.0)
    c = m * (1.0 - m) / v - 1.0
    if c <= 0:
        return BetaComponent(1.0, 1.0)
    return BetaComponent(min(m * c, SHAPE_CAP), min((1.0 - m) * c, SHAPE_CAP))


def _weighted_objective(a, b, n, sx, sy):
    return (a - 1.0) * sx + (b - 1.0) * sy - n * ln_beta(a, b)


def weighted_beta_mle(n: float, sx: float, sy: float, start: BetaComponent,
                      max_iter: int = MSTEP_MAX_ITER) -> BetaComponent:
    """Maximize sum_i r_i log Beta(x_i; a, b) given the sufficient statistics.

    ``n = sum r_i``, ``sx = sum r_i log x_i``, ``sy = sum r_i log(1 - x_i)``.
    Damped Newton on the digamma score; the objective is concave in (a, b),
    and the backtracking guarantees it never decreases from ``start``.
    """
    a, b = start.alpha, start.beta
    f = _weighted_objective(a, b, n, sx, sy)
    for _ in range(max_iter):
        psi_ab = digamma(a + b)
        ga = sx - n * (digamma(a) - psi_ab)
        gb = sy - n * (digamma(b) - psi_ab)
        t_ab = trigamma(a + b)
        haa = -n * (trigamma(a) - t_ab)
        hbb = -n * (trigamma(b) - t_ab)
        hab = n * t_ab
        det = haa * hbb - hab * hab
        if det <= 0 or not math.isfinite(det):
            break
        da = -(hbb * ga - hab * gb) / det
        db = -(haa * gb - hab * ga) / det
        step = 1.0
        # keep shapes positive
        while a + step * da <= 0 or b + step * db <= 0:
            step *= 0.5
        improved = False
        while step > 1e-12:
            na, nb = a + step * da, b + step * db
            nf = _weighted_objective(na, nb, n, sx, sy)
            if nf >= f:
                improved = True
                break
            step *= 0.5
        if not improved:
            break
        converged = abs(na - a) <= 1e-12 * a and abs(nb - b) <= 1e-12 * b
        a, b, f = na, nb, nf
        if converged or (na > SHAPE_CAP or nb > SHAPE_CAP):
            break
    return BetaComponent(a, b)


def _fit_single(lx: np.ndarray, l1x: np.ndarray) -> BetaComponent:
    x = np.exp(lx)
    return weighted_beta_mle(float(lx.size), float(lx.sum()), float(l1x.sum()), _moments_init(x), max_iter=200)


def single_beta_mle(samples, clamp_eps: float = 1e-9) -> BetaComponent:
    """Unweighted Beta maximum-likelihood fit."""
    x = np.clip(np.asarray(samples, dtype=float), clamp_eps, 1.0 - clamp_eps)
    return _fit_single(np.log(x), np.log1p(-x))


def _mixture_loglik(lx, l1x, m: BetaMixture) -> float:
    w1, w2 = m.weights
    terms = []
    if w1 > 0:
        terms.append(math.log(w1) + (m.c1.alpha - 1) * lx + (m.c1.beta - 1) * l1x - ln_beta(m.c1.alpha, m.c1.beta))
    if w2 > 0:
        terms.append(math.log(w2) + (m.c2.alpha - 1) * lx + (m.c2.beta - 1) * l1x - ln_beta(m.c2.alpha, m.c2.beta))
    return float(np.sum(np.logaddexp.reduce(np.vstack(terms), axis=0)))


def em_fit(samples, cfg: EMConfig = EMConfig()) -> EMResult:
    """Fit a two-component Beta mixture by expectation-maximization.

    Samples are clamped to [eps, 1 - eps]. Initialization splits the data at
    its median with method-of-moments shapes per half and equal weights.

    The fit falls back to a single Beta (``collapsed``) when a weight drops
    below 1e-6, or when the two-component log-likelihood beats the single
    Beta by no more than the BIC penalty of the extra component. The trace
    holds the EM iterates only.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 500:
        raise ValueError(f"EM fit needs at least 500 samples, got {x.size}")
    if np.any(~np.isfinite(x)):
        raise ValueError("samples must be finite")
    x = np.clip(x, cfg.clamp_eps, 1.0 - cfg.clamp_eps)
    lx = np.log(x)
    l1x = np.log1p(-x)
    n = float(x.size)

    med = float(np.median(x))
    lower, upper = x[x <= med], x[x > med]
    if upper.size == 0:
        lower, upper = x[x < med], x[x >= med]
    c1 = _moments_init(lower) if lower.size > 1 else BetaComponent(1.0, 1.0)
    c2 = _moments_init(upper) if upper.size > 1 else BetaComponent(1.0, 1.0)
    w1 = 0.5

    trace: list[float] = []
    converged = False
    collapsed = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        ll, n1, s1x, s1y, s2x, s2y = kernels.beta_mixture_estep(lx, l1x, w1, c1.alpha, c1.beta, c2.alpha, c2.beta)
        trace.append(ll)
        if len(trace) > 1 and (trace[-1] - trace[-2]) / n < cfg.loglik_tol:
            converged = True
            break
        n2 = n - n1
        w1 = n1 / n
        if w1 < COLLAPSE_WEIGHT or w1 > 1.0 - COLLAPSE_WEIGHT:
            collapsed = True
            break
        c1 = weighted_beta_mle(n1, s1x, s1y, c1)
        c2 = weighted_beta_mle(n2, s2x, s2y, c2)

    single = _fit_single(lx, l1x)
    ll_single = _mixture_loglik(lx, l1x, BetaMixture(1.0, single, single))
    if not collapsed:
        mixture = BetaMixture(w1, c1, c2)
        ll = _mixture_loglik(lx, l1x, mixture)
        if not converged:
            # final parameters were produced after the last E-step; score them
            trace.append(ll)
        # a second component that does not pay for its three extra parameters is redundant
        collapsed = ll - ll_single <= REDUNDANT_GAIN_PER_PARAM * 3 * math.log(n)
    if collapsed:
        mixture, ll, converged = BetaMixture(1.0, single, single), ll_single, True

    mixture = mixture.canonical()
    summary = _responsibility_summary(lx, l1x, mixture)
    return EMResult(
        mixture=mixture,
        loglik=ll,
        iterations=it,
        converged=converged,
        collapsed=collapsed,
        n_samples=int(n),
        loglik_trace=trace,
        responsibility_summary=summary,
    )


def _responsibility_summary(lx, l1x, m: BetaMixture) -> dict:
    if m.w1 in (0.0, 1.0):
        return {"mean_r1": m.w1, "frac_r1_gt_half": m.w1}
    l1 = math.log(m.w1) + (m.c1.alpha - 1) * lx + (m.c1.beta - 1) * l1x - ln_beta(m.c1.alpha, m.c1.beta)
    l2 = math.log1p(-m.w1) + (m.c2.alpha - 1) * lx + (m.c2.beta - 1) * l1x - ln_beta(m.c2.alpha, m.c2.beta)
    with np.errstate(over="ignore"):
        r1 = 1.0 / (1.0 + np.exp(l2 - l1))
    return {"mean_r1": float(r1.mean()), "frac_r1_gt_half": float(np.mean(r1 > 0.5))}


def mixture_from_result(res: EMResult, **meta) -> dict:
    """Serializable record of a fit, with caller-supplied context (wind speed, geometry)."""
    return res.mixture.to_record(loglik=res.loglik, n_samples=res.n_samples, **meta)
