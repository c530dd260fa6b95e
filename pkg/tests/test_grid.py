import math

import numpy as np
import pytest
from scipy.special import gammaln

from lsgt.dists import sample_categorical
from lsgt.errors import DegenerateSeriesError
from lsgt.sampler import (
    _categorical_from_nll,
    nu_grid_nll,
    phi_grid_nll,
    rho_grid_nll,
    tau_grid_nll,
    update_nu_grid,
    update_phi_grid,
    update_rho_grid,
    update_tau_grid,
)

from .helpers import random_state


def test_grid_sampler_frequencies_match_weights(rng):
    nll = np.array([1.2, 0.4, 2.0, 0.9])
    w = np.exp(-(nll - nll.min()))
    probs = w / w.sum()
    draws = np.array([_categorical_from_nll(rng, nll) for _ in range(100_000)])
    freq = np.bincount(draws, minlength=4) / draws.size
    np.testing.assert_allclose(freq, probs, atol=0.01)


def test_grid_single_candidate(rng):
    assert all(_categorical_from_nll(rng, np.array([3.3])) == 0 for _ in range(50))


def test_grid_all_non_finite_raises(rng):
    with pytest.raises(DegenerateSeriesError):
        _categorical_from_nll(rng, np.array([math.inf, math.nan]))


def test_grid_partial_non_finite_excluded(rng):
    nll = np.array([0.0, math.inf, 0.0])
    draws = {_categorical_from_nll(rng, nll) for _ in range(200)}
    assert draws == {0, 2}


def test_nu_nll_formula_explicit():
    # spelled-out sum over grid candidates for a tiny mixture-variance vector
    omega2 = np.array([0.5, 2.0, 1.5])
    grid = np.array([2.0, 10.0])
    got = nu_grid_nll(grid, omega2)
    n = 3
    for j, nu in enumerate(grid):
        expected = (
            -n * (nu / 2.0) * math.log(nu / 2.0)
            + n * gammaln(nu / 2.0)
            + (nu + 1.0) / 2.0 * float(np.sum(np.log(omega2)))
            + nu / 2.0 * float(np.sum(1.0 / omega2))
        )
        assert got[j] == pytest.approx(expected, rel=1e-12)


def test_nu_concentrates_at_normal_limit(rng):
    # unit mixture variances at large T: posterior mass piles at the top
    state = random_state(rng, T=400)
    state.theta.omega2 = np.ones(state.T - 1)
    nll = nu_grid_nll(state.grids.nu, state.theta.omega2)
    assert int(np.argmin(nll)) == len(state.grids.nu) - 1
    draws = [update_nu_grid(state, rng) for _ in range(50)]
    assert np.median(draws) == state.grids.nu[-1]


def test_rho_penalty_present(rng):
    # the trend-power posterior carries a log(rho^2+1) penalty: with zero
    # trend coefficient the likelihood term is flat and selection
    # frequencies must follow 1/(rho^2+1) exactly
    state = random_state(rng, T=10, gamma=0.0)
    cand = state.grids.rho
    nll = rho_grid_nll(state, cand)
    rel = nll - nll.min()
    expected = np.log(cand ** 2 + 1.0) - np.log(cand ** 2 + 1.0).min()
    np.testing.assert_allclose(rel, expected, atol=1e-10)


def test_rho_penalty_regression_locked(rng):
    # frozen fixture: removing the penalty changes the implied weights
    state = random_state(rng, T=12)
    cand = state.grids.rho
    nll = rho_grid_nll(state, cand)
    core = nll - np.log(cand ** 2 + 1.0)
    w_with = np.exp(-(nll - nll.min()))
    w_without = np.exp(-(core - core.min()))
    p_with = w_with / w_with.sum()
    p_without = w_without / w_without.sum()
    assert np.max(np.abs(p_with - p_without)) > 1e-4


def test_rho_update_refreshes_forecasts(rng):
    state = random_state(rng, T=15)
    old_yhat = state.paths.yhat.copy()
    update_rho_grid(state, rng)
    from lsgt.model import run_recursion

    full = run_recursion(state.y, state.theta, state.prior)
    assert state.paths.yhat.tolist() == full.yhat.tolist()
    assert state.paths.l.tolist() == full.l.tolist()


def test_variance_grid_nll_matches_direct(rng):
    state = random_state(rng, T=12)
    th = state.theta
    cand = state.grids.tau[:5]
    got = tau_grid_nll(state, cand)
    lp = np.maximum(state.paths.l[:-1], 1e-10)
    for j, tau in enumerate(cand):
        s2 = th.chi2 * (th.phi ** 2 + (1.0 - th.phi) ** 2 * lp ** (2.0 * tau))
        expected = float(
            np.sum(0.5 * (th.nu + 1.0) * np.log1p(state.paths.e ** 2 / (th.nu * s2)))
            + np.sum(0.5 * np.log(s2))
        )
        assert got[j] == pytest.approx(expected, rel=1e-12)


def test_phi_one_candidate_gives_homoscedastic(rng):
    state = random_state(rng, T=12)
    nll = phi_grid_nll(state, np.array([1.0]))
    th = state.theta
    s2 = np.full(state.T - 1, th.chi2)
    expected = float(
        np.sum(0.5 * (th.nu + 1.0) * np.log1p(state.paths.e ** 2 / (th.nu * s2)))
        + np.sum(0.5 * np.log(s2))
    )
    assert nll[0] == pytest.approx(expected, rel=1e-12)


def test_tau_phi_updates_keep_state_consistent(rng):
    state = random_state(rng, T=14)
    update_tau_grid(state, rng)
    update_phi_grid(state, rng)
    from lsgt.model import run_recursion

    full = run_recursion(state.y, state.theta, state.prior)
    assert state.paths.sigma2hat.tolist() == full.sigma2hat.tolist()
