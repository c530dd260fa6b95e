"""Competition forecast metrics: sMAPE, MASE, MSIS and coverage statistics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import MetricError


def _as_1d(name, x) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise MetricError(f"{name} must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(arr)):
        raise MetricError(f"{name} contains non-finite values")
    return arr


def smape(actual, forecast) -> float:
    """Symmetric mean absolute percentage error, on the 0-200 scale."""
    a = _as_1d("actual", actual)
    f = _as_1d("forecast", forecast)
    if a.shape != f.shape:
        raise MetricError(f"length mismatch: {a.shape} vs {f.shape}")
    denom = np.abs(a) + np.abs(f)
    if np.any(denom == 0.0):
        raise MetricError("sMAPE undefined: |actual| + |forecast| is zero at some step")
    return float(200.0 / a.shape[0] * np.sum(np.abs(a - f) / denom))


def _naive_scale(insample: np.ndarray, s: int) -> float:
    """Mean absolute error of the in-sample (seasonal) naive forecast."""
    T = insample.shape[0]
    if T <= s:
        raise MetricError(f"in-sample length {T} must exceed periodicity {s}")
    denom = float(np.mean(np.abs(insample[s:] - insample[:-s])))
    if denom == 0.0:
        raise MetricError("scaled error undefined: constant (seasonal) in-sample series")
    return denom


def mase(actual, forecast, insample, s: int = 1) -> float:
    """Mean absolute scaled error against the in-sample naive forecast."""
    a = _as_1d("actual", actual)
    f = _as_1d("forecast", forecast)
    if a.shape != f.shape:
        raise MetricError(f"length mismatch: {a.shape} vs {f.shape}")
    scale = _naive_scale(_as_1d("insample", insample), s)
    return float(np.mean(np.abs(a - f)) / scale)


def msis(actual, lower, upper, alpha: float, insample, s: int = 1) -> float:
    """Mean scaled interval score for a central (1 - alpha) interval.

    Width plus 2/alpha penalties for observations escaping the interval,
    scaled by the in-sample naive error.
    """
    a = _as_1d("actual", actual)
    lo = _as_1d("lower", lower)
    hi = _as_1d("upper", upper)
    if not (a.shape == lo.shape == hi.shape):
        raise MetricError("actual, lower and upper must have equal lengths")
    if np.any(hi < lo):
        raise MetricError("upper bound below lower bound")
    if not 0.0 < alpha < 1.0:
        raise MetricError(f"alpha must lie in (0,1), got {alpha}")
    scale = _naive_scale(_as_1d("insample", insample), s)
    score = (
        (hi - lo)
        + 2.0 / alpha * (lo - a) * (a < lo)
        + 2.0 / alpha * (a - hi) * (a > hi)
    )
    return float(np.mean(score) / scale)


def coverage_flags(actual, quantile_forecasts: dict) -> dict[float, float]:
    """Fraction of test points falling below each forecast quantile."""
    a = _as_1d("actual", actual)
    if not quantile_forecasts:
        raise MetricError("no quantile forecasts supplied")
    out: dict[float, float] = {}
    for level, q in quantile_forecasts.items():
        qa = _as_1d(f"quantile {level}", q)
        if qa.shape != a.shape:
            raise MetricError(f"quantile {level} length mismatch")
        out[float(level)] = float(np.mean(a < qa))
    return out


@dataclass
class EvalRecord:
    """Per-series evaluation: point and interval metrics plus runtime."""

    series_id: str
    smape: float
    mase: float
    msis: dict[str, float] = field(default_factory=dict)
    coverage: dict[str, float] = field(default_factory=dict)
    runtime_seconds: float = 0.0
