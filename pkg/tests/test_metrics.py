import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lsgt.errors import MetricError
from lsgt.metrics import coverage_flags, mase, msis, smape

EXACT = 1e-9

finite_arrays = st.lists(st.floats(min_value=0.5, max_value=1e5), min_size=1, max_size=12)


def test_smape_perfect_forecast():
    assert smape([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == pytest.approx(0.0, abs=EXACT)


def test_smape_golden_value():
    assert smape([100.0], [50.0]) == pytest.approx(200.0 * 50.0 / 150.0, abs=EXACT)
    assert smape([50.0], [100.0]) == pytest.approx(200.0 * 50.0 / 150.0, abs=EXACT)


def test_smape_zero_denominator():
    with pytest.raises(MetricError):
        smape([0.0], [0.0])


def test_smape_range():
    assert smape([1.0], [1e9]) <= 200.0 + EXACT


@given(a=finite_arrays)
def test_smape_symmetry(a):
    b = [v * 1.7 + 0.1 for v in a]
    assert smape(a, b) == pytest.approx(smape(b, a), rel=1e-12)


def test_mase_perfect_forecast():
    assert mase([5.0, 6.0], [5.0, 6.0], [1.0, 2.0, 3.0, 4.0], s=1) == pytest.approx(0.0, abs=EXACT)


def test_mase_golden_value():
    # in-sample naive errors: |2-1|,|3-2|,|4-3| -> denominator 1;
    # forecast off by 2 at both horizons -> 2
    assert mase([5.0, 6.0], [3.0, 4.0], [1.0, 2.0, 3.0, 4.0], s=1) == pytest.approx(2.0, abs=EXACT)


def test_mase_seasonal_constant_denominator_error():
    insample = [1.0, 2.0, 3.0, 4.0] * 3
    with pytest.raises(MetricError):
        mase([1.0], [2.0], insample, s=4)


def test_mase_requires_long_insample():
    with pytest.raises(MetricError):
        mase([1.0], [1.0], [1.0, 2.0], s=4)


@given(a=finite_arrays, k=st.floats(min_value=0.1, max_value=100.0))
def test_mase_scale_invariance(a, k):
    if len(a) < 3:
        a = a + [1.0, 2.0, 5.0]
    insample = a
    actual = a[:2]
    forecast = [v + 1.0 for v in actual]
    try:
        base = mase(actual, forecast, insample, s=1)
    except MetricError:
        return  # constant in-sample series
    scaled = mase([v * k for v in actual], [v * k for v in forecast],
                  [v * k for v in insample], s=1)
    assert scaled == pytest.approx(base, rel=1e-9)


def test_msis_all_covered_is_scaled_width():
    insample = [1.0, 2.0, 3.0, 4.0]
    got = msis([2.0, 3.0], [1.0, 2.0], [4.0, 6.0], 0.1, insample, s=1)
    assert got == pytest.approx(np.mean([3.0, 4.0]) / 1.0, abs=EXACT)


def test_msis_golden_penalty():
    # interval [0, 10], actual 12, alpha 0.1, unit denominator:
    # width 10 plus (2/0.1) * 2 = 50
    insample = [1.0, 2.0, 3.0, 4.0]
    got = msis([12.0], [0.0], [10.0], 0.1, insample, s=1)
    assert got == pytest.approx(50.0, abs=EXACT)


def test_msis_penalty_coefficient_is_two_over_alpha():
    insample = [1.0, 2.0, 3.0, 4.0]
    a1 = msis([12.0], [0.0], [10.0], 0.1, insample, s=1)
    a2 = msis([12.0], [0.0], [10.0], 0.05, insample, s=1)
    assert a2 - a1 == pytest.approx((2.0 / 0.05 - 2.0 / 0.1) * 2.0, abs=EXACT)


def test_msis_widening_covering_interval_increases_score():
    insample = [1.0, 2.0, 3.0, 4.0]
    narrow = msis([2.0], [1.0], [3.0], 0.1, insample, s=1)
    wide = msis([2.0], [0.5], [3.5], 0.1, insample, s=1)
    assert wide > narrow


def test_msis_rejects_crossed_bounds():
    with pytest.raises(MetricError):
        msis([1.0], [2.0], [1.0], 0.1, [1.0, 2.0, 3.0], s=1)


def test_coverage_below_99_fixture():
    q = {0.99: np.array([10.0, 10.0]), 0.5: np.array([5.0, 5.0])}
    got = coverage_flags([4.999, 4.998], q)
    assert got[0.99] == 1.0
    assert got[0.5] == 1.0


def test_coverage_empty_map_errors():
    with pytest.raises(MetricError):
        coverage_flags([1.0], {})


def test_coverage_calibrated_fixture(rng):
    # actuals drawn from the same distribution the quantiles describe
    n = 10_000
    actual = rng.normal(0.0, 1.0, size=n)
    from scipy.stats import norm

    q = {0.95: np.full(n, norm.ppf(0.95)), 0.05: np.full(n, norm.ppf(0.05))}
    got = coverage_flags(actual, q)
    assert got[0.95] == pytest.approx(0.95, abs=0.02)
    assert got[0.05] == pytest.approx(0.05, abs=0.02)


def test_coverage_length_mismatch():
    with pytest.raises(MetricError):
        coverage_flags([1.0, 2.0], {0.5: np.array([1.0])})
