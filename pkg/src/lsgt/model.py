"""Model parameters and the deterministic state recursions.

The observation model is a Student-t around a one-step-ahead forecast built
from a smoothed level, a damped local trend and a power-law global trend,
optionally modulated by multiplicative seasonal factors smoothed on the log
scale:

    yhat[t+1]   = (l[t] + gamma * l[t]^rho + lam * b[t]) * s_applied[t+1]
    l[t]        = alpha * (y[t] / s_applied[t]) + (1 - alpha) * l[t-1]
    b[t]        = beta * (l[t] - l[t-1]) + (1 - beta) * b[t-1]
    log s[t]    = zeta * log(y[t] / l[t]) + (1 - zeta) * log s[t-m]
    sigma2[t+1] = chi2 * (phi^2 + (1 - phi)^2 * l[t]^(2*tau))

Seasonal factors are indexed by the step at which they were estimated; the
factor applied at step t is the one estimated a full period earlier (the
seed factors cover the first period).  The m seed factors satisfy
``sum(log s_init) == 0`` so they change no overall scale.  The non-seasonal
variant fixes all factors at one; the seasonal variant fixes ``lam`` at
zero.

All recursions here are pure scalar loops: they are the single source of
truth that the sampler's incremental refreshes and the vectorised grid
evaluations must agree with.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import StateRecursionError

LEVEL_FLOOR = 1e-10
SEASONAL_SUM_TOL = 1e-12

NON_SEASONAL = "non_seasonal"
SEASONAL = "seasonal"
HOMOSCEDASTIC = "homoscedastic"
HETEROSCEDASTIC = "heteroscedastic"


@dataclass(frozen=True)
class SeasonalPrior:
    """Prior family for the seed log seasonal factors."""

    kind: str = "horseshoe"  # "horseshoe" | "cauchy"
    scale: float | None = None

    def __post_init__(self):
        if self.kind not in ("horseshoe", "cauchy"):
            raise ValueError(f"unknown seasonal prior {self.kind!r}")
        if self.kind == "cauchy" and not (self.scale and self.scale > 0):
            raise ValueError("cauchy seasonal prior needs a positive scale")

    @classmethod
    def parse(cls, text: str) -> "SeasonalPrior":
        """Parse "horseshoe" or "cauchy:<scale>"."""
        if text == "horseshoe":
            return cls("horseshoe")
        if text.startswith("cauchy:"):
            return cls("cauchy", float(text.split(":", 1)[1]))
        raise ValueError(f"cannot parse seasonal prior {text!r}")

    def spec(self) -> str:
        return self.kind if self.kind == "horseshoe" else f"cauchy:{self.scale}"


@dataclass(frozen=True)
class PriorConfig:
    """Prior scales, grid bounds and model variant switches.

    ``s_gamma``/``s_b1`` default to max(y)/100 at fit time so the trend and
    initial-trend priors adapt to the scale of the series; ``s_lambda``
    defaults to 1.  ``chi2_prior`` optionally replaces the scale-invariant
    improper prior on the error variance with a proper IG(shape, scale) —
    needed when simulating parameters from the prior (calibration studies).
    """

    model_kind: str = NON_SEASONAL
    variance_mode: str = HETEROSCEDASTIC
    seasonal_prior: SeasonalPrior = field(default_factory=SeasonalPrior)
    s_gamma: float | None = None
    s_lambda: float = 1.0
    s_b1: float | None = None
    beta_a: float = 1.0
    beta_b: float = 0.5
    nu_lower: float = 1.6
    nu_upper: float = 1000.0
    nu_grid_size: int = 100
    power_grid_size: int = 64
    chi2_prior: tuple[float, float] | None = None

    def __post_init__(self):
        if self.model_kind not in (NON_SEASONAL, SEASONAL):
            raise ValueError(f"unknown model kind {self.model_kind!r}")
        if self.variance_mode not in (HOMOSCEDASTIC, HETEROSCEDASTIC):
            raise ValueError(f"unknown variance mode {self.variance_mode!r}")
        if not (0 < self.nu_lower < self.nu_upper):
            raise ValueError("need 0 < nu_lower < nu_upper")
        for name in ("s_gamma", "s_lambda", "s_b1"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive, got {v}")
        if not (self.beta_a > 0 and self.beta_b > 0):
            raise ValueError("beta hyperparameters must be positive")

    def resolved_scales(self, y) -> tuple[float, float, float]:
        """(s_gamma, s_lambda, s_b1) with data-adaptive defaults filled in."""
        auto = float(np.max(y)) / 100.0
        return (
            self.s_gamma if self.s_gamma is not None else auto,
            self.s_lambda,
            self.s_b1 if self.s_b1 is not None else auto,
        )


# bounds from the model definition
RHO_RANGE = (-0.5, 1.0)
LAM_RANGE = (-100.0, 1.0)
B1_RANGE = (-100.0, 1.0)


@dataclass
class ParameterDraw:
    """One complete posterior sample: model parameters plus latent variables.

    ``log_s_init`` holds the m seed log seasonal factors (a single zero for
    non-seasonal fits).  ``omega2`` are the per-observation t-mixture
    variances; the ``xi_*`` latents expand the Cauchy coefficient priors;
    ``psi2``/``delta2``/``eta_s``/``eta_delta`` are the seasonal shrinkage
    latents (``psi2`` and ``eta_s`` carry m entries — the constrained m-th
    factor keeps its own local variance but is never proposed directly).
    """

    nu: float
    gamma: float
    rho: float
    lam: float
    alpha: float
    beta: float
    zeta: float
    chi2: float
    phi: float
    tau: float
    b1: float
    log_s_init: np.ndarray
    omega2: np.ndarray
    xi_gamma2: float = 1.0
    xi_lambda2: float = 1.0
    xi_b1_2: float = 1.0
    psi2: np.ndarray = None
    delta2: float = 1.0
    eta_s: np.ndarray = None
    eta_delta: float = 1.0

    def __post_init__(self):
        self.log_s_init = np.asarray(self.log_s_init, dtype=float)
        self.omega2 = np.asarray(self.omega2, dtype=float)
        m = self.log_s_init.shape[0]
        if self.psi2 is None:
            self.psi2 = np.ones(m)
        if self.eta_s is None:
            self.eta_s = np.ones(m)
        self.psi2 = np.asarray(self.psi2, dtype=float)
        self.eta_s = np.asarray(self.eta_s, dtype=float)

    @property
    def m(self) -> int:
        return self.log_s_init.shape[0]

    def copy(self) -> "ParameterDraw":
        return replace(
            self,
            log_s_init=self.log_s_init.copy(),
            omega2=self.omega2.copy(),
            psi2=self.psi2.copy(),
            eta_s=self.eta_s.copy(),
        )

    def proposal_clone(self) -> "ParameterDraw":
        """Shallow copy for MH trials: scalars are replaced, arrays shared."""
        return replace(self)

    def validate(self) -> None:
        if abs(float(np.sum(self.log_s_init))) > SEASONAL_SUM_TOL:
            raise ValueError(
                f"seed log seasonal factors sum to {np.sum(self.log_s_init)}, not 0"
            )
        for name in ("nu", "chi2", "xi_gamma2", "xi_lambda2", "xi_b1_2", "delta2"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name}={v} must be positive and finite")
        for name in ("omega2", "psi2", "eta_s"):
            arr = getattr(self, name)
            if not (np.all(arr > 0) and np.all(np.isfinite(arr))):
                raise ValueError(f"{name} must be positive and finite")
        if not self.eta_delta > 0:
            raise ValueError(f"eta_delta={self.eta_delta} must be positive")
        if not RHO_RANGE[0] <= self.rho <= RHO_RANGE[1]:
            raise ValueError(f"rho={self.rho} outside {RHO_RANGE}")
        if not LAM_RANGE[0] <= self.lam <= LAM_RANGE[1]:
            raise ValueError(f"lam={self.lam} outside {LAM_RANGE}")
        if not B1_RANGE[0] < self.b1 < B1_RANGE[1]:
            raise ValueError(f"b1={self.b1} outside open {B1_RANGE}")
        for name in ("alpha", "beta", "zeta"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name}={v} outside (0, 1)")
        for name in ("phi", "tau"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")


@dataclass
class StatePaths:
    """Deterministic per-draw trajectories.

    ``l``/``b``/``log_s`` have length T (``log_s[:m]`` are the seeds);
    ``yhat``/``sigma2hat``/``e`` have length T-1 and align with y[1:].
    """

    l: np.ndarray
    b: np.ndarray
    log_s: np.ndarray
    yhat: np.ndarray
    sigma2hat: np.ndarray
    e: np.ndarray
    clamp_events: int = 0


def effective_lam(theta: ParameterDraw, cfg: PriorConfig) -> float:
    return 0.0 if cfg.model_kind == SEASONAL else theta.lam


def applied_index(t: int, m: int) -> int:
    """Index into log_s of the factor applied at step t (0-based)."""
    return t - m if t >= m else t


def initial_level(y, m: int, model_kind: str, log_s_init) -> float:
    """Level seed: the first observation, deseasonalised by its seed factor."""
    if model_kind != SEASONAL:
        return float(y[0])
    return y[0] / math.exp(log_s_init[0])


def run_recursion(y, theta: ParameterDraw, cfg: PriorConfig) -> StatePaths:
    """Run the full state recursion for one parameter setting.

    Pure function of its inputs.  Levels are floored at ``LEVEL_FLOOR``
    before being raised to fractional powers (the clamp count is recorded);
    any non-finite intermediate raises ``StateRecursionError`` carrying the
    step index, which samplers treat as -inf log-likelihood.
    """
    y = np.asarray(y, dtype=float)
    T = y.shape[0]
    seasonal = cfg.model_kind == SEASONAL
    m = theta.m if seasonal else 1
    if T < 2:
        raise ValueError("need at least two observations")
    if seasonal and T < 2 * m:
        raise ValueError(f"seasonal recursion needs T >= 2m, got T={T}, m={m}")

    alpha, beta, zeta = theta.alpha, theta.beta, theta.zeta
    gamma, rho = theta.gamma, theta.rho
    chi2, phi, tau = theta.chi2, theta.phi, theta.tau
    lam = effective_lam(theta, cfg)

    log_s = np.zeros(T)
    if seasonal:
        log_s[:m] = theta.log_s_init

    l = np.empty(T)
    b = np.empty(T)
    yhat = np.empty(T - 1)
    sigma2hat = np.empty(T - 1)
    e = np.empty(T - 1)
    clamps = 0

    l_prev = initial_level(y, m, cfg.model_kind, theta.log_s_init)
    b_prev = theta.b1
    l[0] = l_prev
    b[0] = b_prev

    try:
        for t in range(1, T):
            a_t = math.exp(log_s[applied_index(t, m)]) if seasonal else 1.0
            lp = l_prev
            if lp < LEVEL_FLOOR:
                lp = LEVEL_FLOOR
                clamps += 1
            yh = (l_prev + gamma * lp ** rho + lam * b_prev) * a_t
            s2 = chi2 * (phi ** 2 + (1.0 - phi) ** 2 * lp ** (2.0 * tau))
            l_t = alpha * (y[t] / a_t) + (1.0 - alpha) * l_prev
            b_t = beta * (l_t - l_prev) + (1.0 - beta) * b_prev
            if seasonal and t >= m:
                log_s[t] = zeta * math.log(y[t] / l_t) + (1.0 - zeta) * log_s[t - m]
                if not math.isfinite(log_s[t]):
                    raise StateRecursionError(t)
            if not (math.isfinite(yh) and math.isfinite(s2) and math.isfinite(l_t) and math.isfinite(b_t)):
                raise StateRecursionError(t)
            yhat[t - 1] = yh
            sigma2hat[t - 1] = s2
            e[t - 1] = y[t] - yh
            l[t] = l_t
            b[t] = b_t
            l_prev = l_t
            b_prev = b_t
    except (OverflowError, ValueError) as exc:
        raise StateRecursionError(t) from exc

    return StatePaths(l=l, b=b, log_s=log_s, yhat=yhat, sigma2hat=sigma2hat, e=e, clamp_events=clamps)


def applied_factors(log_s: np.ndarray, m: int, seasonal: bool) -> np.ndarray:
    """Factors multiplying yhat[1..T-1]: a[j] = exp(log_s at the applied index)."""
    T = log_s.shape[0]
    if not seasonal:
        return np.ones(T - 1)
    idx = np.arange(1, T)
    idx = np.where(idx >= m, idx - m, idx)
    return np.exp(log_s[idx])


def recompute_trend_path(paths: StatePaths, theta: ParameterDraw) -> None:
    """Refresh b in place after a change of b1 (or beta); l is unchanged."""
    beta = theta.beta
    l = paths.l
    b = paths.b
    b[0] = theta.b1
    for t in range(1, l.shape[0]):
        b[t] = beta * (l[t] - l[t - 1]) + (1.0 - beta) * b[t - 1]


def recompute_yhat(y, paths: StatePaths, theta: ParameterDraw, cfg: PriorConfig) -> None:
    """Refresh yhat and e in place after a change of gamma, rho, lam or b."""
    seasonal = cfg.model_kind == SEASONAL
    m = theta.m if seasonal else 1
    gamma, rho = theta.gamma, theta.rho
    lam = effective_lam(theta, cfg)
    l, b, log_s = paths.l, paths.b, paths.log_s
    for t in range(1, l.shape[0]):
        a_t = math.exp(log_s[applied_index(t, m)]) if seasonal else 1.0
        lp = l[t - 1]
        if lp < LEVEL_FLOOR:
            lp = LEVEL_FLOOR
        yh = (l[t - 1] + gamma * lp ** rho + lam * b[t - 1]) * a_t
        paths.yhat[t - 1] = yh
        paths.e[t - 1] = y[t] - yh


def recompute_sigma2(paths: StatePaths, theta: ParameterDraw) -> None:
    """Refresh sigma2hat in place after a change of chi2, phi or tau."""
    chi2, phi, tau = theta.chi2, theta.phi, theta.tau
    l = paths.l
    for t in range(1, l.shape[0]):
        lp = l[t - 1]
        if lp < LEVEL_FLOOR:
            lp = LEVEL_FLOOR
        paths.sigma2hat[t - 1] = chi2 * (phi ** 2 + (1.0 - phi) ** 2 * lp ** (2.0 * tau))


def negative_log_likelihood(paths: StatePaths, nu: float) -> float:
    """Student-t negative log likelihood of the residuals.

    Includes the df-dependent normalising constants (the df is itself
    sampled, so they cannot be dropped).  Returns +inf instead of raising
    when the inputs are degenerate.
    """
    if not nu > 0:
        raise ValueError(f"nu must be positive, got {nu}")
    e = paths.e
    s2 = paths.sigma2hat
    n = e.shape[0]
    acc = 0.0
    try:
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            for t in range(n):
                acc += 0.5 * (nu + 1.0) * math.log1p(e[t] * e[t] / (nu * s2[t])) + 0.5 * math.log(s2[t])
    except (ValueError, OverflowError, ZeroDivisionError):
        return math.inf
    const = 0.5 * math.log(nu * math.pi) + math.lgamma(0.5 * nu) - math.lgamma(0.5 * (nu + 1.0))
    total = acc + n * const
    return total if math.isfinite(total) else math.inf
