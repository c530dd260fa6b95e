"""Analytic gradients of the negative log likelihood for the MH proposals.

Both routines propagate chain-rule recursions alongside the state paths.
``smoothing_gradient`` differentiates with respect to the level and trend
smoothing weights; it is exact for the non-seasonal model and, for seasonal
fits, holds the seasonal factor path fixed (the feedback of the smoothing
weights through the seasonal recursion is dropped — the proposal stays a
valid MH proposal either way, gradients only steer it).
``seasonal_gradient`` differentiates with respect to the free seed log
seasonal factors, including the constrained m-th seed and the dependence of
the level seed on the seasonal seeds.
"""

from __future__ import annotations

import math

import numpy as np

from .model import (
    LEVEL_FLOOR,
    SEASONAL,
    ParameterDraw,
    PriorConfig,
    StatePaths,
    applied_index,
    effective_lam,
)


def smoothing_gradient(y, theta: ParameterDraw, cfg: PriorConfig, paths: StatePaths):
    """(dL/dalpha, dL/dbeta) for the negative log likelihood L.

    The trend smoothing weight never enters the conditional scale, so its
    gradient flows only through the forecasts; the level weight also moves
    the heteroscedastic scale.
    """
    T = len(y)
    seasonal = cfg.model_kind == SEASONAL
    m = theta.m if seasonal else 1
    alpha, beta = theta.alpha, theta.beta
    gamma, rho, tau = theta.gamma, theta.rho, theta.tau
    nu = theta.nu
    lam = effective_lam(theta, cfg)
    het = 2.0 * tau * theta.chi2 * (1.0 - theta.phi) ** 2

    l, b, log_s = paths.l, paths.b, paths.log_s
    e, s2 = paths.e, paths.sigma2hat

    dl_prev = 0.0        # dl/dalpha; dl/dbeta is identically zero
    dba_prev = 0.0       # db/dalpha
    dbb_prev = 0.0       # db/dbeta
    g_alpha = 0.0
    g_beta = 0.0

    for t in range(1, T):
        a_t = math.exp(log_s[applied_index(t, m)]) if seasonal else 1.0
        lp = l[t - 1]
        if lp < LEVEL_FLOOR:
            lp = LEVEL_FLOOR
        dyhat_a = ((1.0 + gamma * rho * lp ** (rho - 1.0)) * dl_prev + lam * dba_prev) * a_t
        dyhat_b = lam * dbb_prev * a_t
        dsig2_a = het * lp ** (2.0 * tau - 1.0) * dl_prev

        et = e[t - 1]
        s2t = s2[t - 1]
        denom = nu * s2t + et * et
        g_alpha += -0.5 * nu * dsig2_a / s2t + 0.5 * (nu + 1.0) * (
            nu * dsig2_a - 2.0 * et * dyhat_a
        ) / denom
        g_beta += 0.5 * (nu + 1.0) * (-2.0 * et * dyhat_b) / denom

        dl_t = y[t] / a_t - l[t - 1] + (1.0 - alpha) * dl_prev
        dba_t = beta * (dl_t - dl_prev) + (1.0 - beta) * dba_prev
        dbb_t = (l[t] - l[t - 1]) - b[t - 1] + (1.0 - beta) * dbb_prev
        dl_prev, dba_prev, dbb_prev = dl_t, dba_t, dbb_t

    return g_alpha, g_beta


def trend_block_gradient(y, theta: ParameterDraw, cfg: PriorConfig, paths: StatePaths):
    """(dL/dalpha, dL/dbeta, dL/dlam, dL/db1) for joint trend-block moves.

    The two coefficients enter the forecasts linearly: the local trend
    multiplies the smoothed trend path, and the initial trend propagates as
    lam * (1-beta)^(t-1).  Neither touches the conditional scale.
    """
    T = len(y)
    seasonal = cfg.model_kind == SEASONAL
    m = theta.m if seasonal else 1
    alpha, beta = theta.alpha, theta.beta
    gamma, rho, tau = theta.gamma, theta.rho, theta.tau
    nu = theta.nu
    lam = effective_lam(theta, cfg)
    het = 2.0 * tau * theta.chi2 * (1.0 - theta.phi) ** 2

    l, b, log_s = paths.l, paths.b, paths.log_s
    e, s2 = paths.e, paths.sigma2hat

    dl_prev = 0.0
    dba_prev = 0.0
    dbb_prev = 0.0
    pw_prev = 1.0  # (1-beta)^(t-1) at the previous state
    g_alpha = g_beta = g_lam = g_b1 = 0.0

    for t in range(1, T):
        a_t = math.exp(log_s[applied_index(t, m)]) if seasonal else 1.0
        lp = l[t - 1]
        if lp < LEVEL_FLOOR:
            lp = LEVEL_FLOOR
        dyhat_a = ((1.0 + gamma * rho * lp ** (rho - 1.0)) * dl_prev + lam * dba_prev) * a_t
        dyhat_b = lam * dbb_prev * a_t
        dyhat_l = b[t - 1] * a_t
        dyhat_1 = lam * pw_prev * a_t
        dsig2_a = het * lp ** (2.0 * tau - 1.0) * dl_prev

        et = e[t - 1]
        s2t = s2[t - 1]
        denom = nu * s2t + et * et
        common = 0.5 * (nu + 1.0) / denom
        g_alpha += -0.5 * nu * dsig2_a / s2t + common * (nu * dsig2_a - 2.0 * et * dyhat_a)
        g_beta += common * (-2.0 * et * dyhat_b)
        g_lam += common * (-2.0 * et * dyhat_l)
        g_b1 += common * (-2.0 * et * dyhat_1)

        dl_t = y[t] / a_t - l[t - 1] + (1.0 - alpha) * dl_prev
        dba_t = beta * (dl_t - dl_prev) + (1.0 - beta) * dba_prev
        dbb_t = (l[t] - l[t - 1]) - b[t - 1] + (1.0 - beta) * dbb_prev
        dl_prev, dba_prev, dbb_prev = dl_t, dba_t, dbb_t
        pw_prev *= 1.0 - beta

    return g_alpha, g_beta, g_lam, g_b1


def seed_gradient_matrix(m: int) -> np.ndarray:
    """d(log seed p) / d(free log seed i) for p = 0..m-1, i = 0..m-2.

    The first m-1 seeds are free; the last balances them so the seed logs
    sum to zero, hence its row is -1.
    """
    d = np.zeros((m, m - 1))
    for i in range(m - 1):
        d[i, i] = 1.0
    d[m - 1, :] = -1.0
    return d


def initial_level_gradient(y, m: int, log_s_init) -> np.ndarray:
    """Gradient of the deseasonalised level seed w.r.t. the free seeds.

    Only the first seed enters l[0] = y[0] / s[0], so the gradient is
    -y[0]/s[0] in the first direction and zero elsewhere.
    """
    g = np.zeros(m - 1)
    g[0] = -y[0] / math.exp(log_s_init[0])
    return g


def seasonal_gradient(y, theta: ParameterDraw, cfg: PriorConfig, paths: StatePaths) -> np.ndarray:
    """dL/d(free log seed), shape (m-1,), for the seasonal model.

    Tracks the full chain: level seed, level and seasonal recursions, the
    applied factor in each forecast, and the heteroscedastic scale.  The
    local trend drops out because the seasonal model runs with lam = 0.
    """
    T = len(y)
    m = theta.m
    k = m - 1
    alpha, zeta = theta.alpha, theta.zeta
    gamma, rho, tau = theta.gamma, theta.rho, theta.tau
    nu = theta.nu
    het = 2.0 * tau * theta.chi2 * (1.0 - theta.phi) ** 2

    l, log_s = paths.l, paths.log_s
    e, s2 = paths.e, paths.sigma2hat

    dlogs = np.zeros((T, k))
    dlogs[:m] = seed_gradient_matrix(m)
    dl_prev = initial_level_gradient(y, m, theta.log_s_init)
    grad = np.zeros(k)

    for t in range(1, T):
        idx = applied_index(t, m)
        a_t = math.exp(log_s[idx])
        dlog_applied = dlogs[idx]
        lp = l[t - 1]
        if lp < LEVEL_FLOOR:
            lp = LEVEL_FLOOR
        glob = l[t - 1] + gamma * lp ** rho
        dyhat = (1.0 + gamma * rho * lp ** (rho - 1.0)) * a_t * dl_prev + glob * a_t * dlog_applied
        dsig2 = het * lp ** (2.0 * tau - 1.0) * dl_prev

        et = e[t - 1]
        s2t = s2[t - 1]
        denom = nu * s2t + et * et
        grad += -0.5 * nu / s2t * dsig2 + 0.5 * (nu + 1.0) * (nu * dsig2 - 2.0 * et * dyhat) / denom

        dl_t = -(alpha * y[t] / a_t) * dlog_applied + (1.0 - alpha) * dl_prev
        if t >= m:
            dlogs[t] = -(zeta / l[t]) * dl_t + (1.0 - zeta) * dlogs[t - m]
        dl_prev = dl_t

    return grad
