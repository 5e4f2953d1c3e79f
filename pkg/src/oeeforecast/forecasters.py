"""Component forecasters: Holt-trend ETS, seasonal naive, and recombination.

After decomposition the trend is smooth and aperiodic, so the additive
error / additive trend / no-season smoother is enough for it; seasonal
components repeat their last full cycle; the residual model lives in
``sarimax``. Recombined forecasts are clamped to the observable
efficiency range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .series import TimeSeries

OEE_MIN = 1.0
OEE_MAX = 60.0


@dataclass(frozen=True)
class EtsFit:
    alpha: float  # level smoothing, in (0, 1)
    beta: float  # trend smoothing, in [0, 1)
    level: float
    slope: float
    sse: float
    n_obs: int = 0

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must be in (0,1), got {self.alpha}")
        if not (0.0 <= self.beta < 1.0):
            raise ValueError(f"beta must be in [0,1), got {self.beta}")
        if self.sse < 0.0:
            raise ValueError("sse must be >= 0")


@dataclass(frozen=True)
class ForecastResult:
    origin_index: int
    horizon: int
    values: tuple[float, ...]
    model_label: str

    def __post_init__(self):
        if self.horizon < 1 or len(self.values) != self.horizon:
            raise ValueError("horizon must be >= 1 and match len(values)")
        if not all(np.isfinite(v) for v in self.values):
            raise ValueError("forecast values must be finite")


def _init_state(y: np.ndarray) -> tuple[float, float]:
    # least-squares line through the first 10 points; state is positioned
    # one step before the first observation so the first prediction lands
    # on the line's intercept
    k = min(10, y.size)
    t = np.arange(k, dtype=float)
    slope, intercept = np.polyfit(t, y[:k], 1)
    return float(intercept - slope), float(slope)


def _holt_filter(y: np.ndarray, alpha: float, beta: float, l0: float, b0: float):
    level, slope, sse = l0, b0, 0.0
    for v in y:
        pred = level + slope
        err = v - pred
        sse += err * err
        new_level = alpha * v + (1.0 - alpha) * pred
        slope = beta * (new_level - level) + (1.0 - beta) * slope
        level = new_level
    return level, slope, sse


def _holt_sse_grid(y: np.ndarray, alphas: np.ndarray, betas: np.ndarray, l0: float, b0: float):
    """One-step-ahead SSE for every (alpha, beta) pair, vectorized over the grid."""
    a = np.repeat(alphas, betas.size)
    b = np.tile(betas, alphas.size)
    level = np.full(a.size, l0)
    slope = np.full(a.size, b0)
    sse = np.zeros(a.size)
    for v in y:
        pred = level + slope
        err = v - pred
        sse += err * err
        new_level = a * v + (1.0 - a) * pred
        slope = b * (new_level - level) + (1.0 - b) * slope
        level = new_level
    k = int(np.argmin(sse))
    return float(a[k]), float(b[k]), float(sse[k])


def ets_fit(ts: TimeSeries) -> EtsFit:
    """Fit the (A,A,N) smoother by one-step-ahead SSE.

    A full 0.01-step grid over alpha in (0,1), beta in [0,1) is scanned
    first (vectorized), then coordinate descent with a shrinking step
    polishes the winner.
    """
    y = ts.values.astype(float)
    if y.size < 10:
        raise ValueError("ets_fit needs length >= 10")
    l0, b0 = _init_state(y)

    alphas = np.arange(0.01, 1.00, 0.01)
    betas = np.arange(0.00, 1.00, 0.01)
    alpha, beta, best = _holt_sse_grid(y, alphas, betas, l0, b0)

    step = 0.005
    while step >= 1e-4:
        moved = False
        for da, db in ((step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)):
            ca = min(max(alpha + da, 1e-4), 1.0 - 1e-4)
            cb = min(max(beta + db, 0.0), 1.0 - 1e-4)
            _, _, sse = _holt_filter(y, ca, cb, l0, b0)
            if sse < best - 1e-12:
                alpha, beta, best = ca, cb, sse
                moved = True
        if not moved:
            step /= 2.0

    level, slope, sse = _holt_filter(y, alpha, beta, l0, b0)
    return EtsFit(alpha=alpha, beta=beta, level=level, slope=slope, sse=sse, n_obs=y.size)


def ets_update(fit: EtsFit, ts: TimeSeries) -> EtsFit:
    """Re-filter a (possibly longer) series with frozen smoothing weights."""
    y = ts.values.astype(float)
    l0, b0 = _init_state(y)
    level, slope, sse = _holt_filter(y, fit.alpha, fit.beta, l0, b0)
    return EtsFit(fit.alpha, fit.beta, level, slope, sse, n_obs=y.size)


def ets_forecast(fit: EtsFit, horizon: int) -> ForecastResult:
    """Linear continuation: forecast(h) = level + h * slope."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    vals = tuple(fit.level + h * fit.slope for h in range(1, horizon + 1))
    return ForecastResult(
        origin_index=fit.n_obs - 1, horizon=horizon, values=vals, model_label="ets"
    )


def seasonal_naive_forecast(seasonal: TimeSeries, period: int, horizon: int) -> ForecastResult:
    """Repeat the last complete cycle of the component."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    n = len(seasonal)
    if n < period:
        raise ValueError(f"series length {n} < period {period}")
    x = seasonal.values
    vals = tuple(float(x[n - period + ((h - 1) % period)]) for h in range(1, horizon + 1))
    return ForecastResult(
        origin_index=n - 1,
        horizon=horizon,
        values=vals,
        model_label=f"seasonal_naive_{period}",
    )


def recombine_forecasts(
    trend_f: ForecastResult,
    seasonal_fs,
    residual_f: ForecastResult,
    clamp: tuple[float, float] = (OEE_MIN, OEE_MAX),
    model_label: str | None = None,
) -> ForecastResult:
    """Element-wise sum of component forecasts, clamped to the data range."""
    parts = [trend_f, *seasonal_fs, residual_f]
    horizon = trend_f.horizon
    origin = trend_f.origin_index
    for p in parts[1:]:
        if p.horizon != horizon:
            raise ValueError(f"horizon mismatch: {p.model_label} has {p.horizon} != {horizon}")
        if p.origin_index != origin:
            raise ValueError(f"origin mismatch: {p.model_label} at {p.origin_index} != {origin}")
    total = np.sum([p.values for p in parts], axis=0)
    lo, hi = clamp
    total = np.clip(total, lo, hi)
    return ForecastResult(
        origin_index=origin,
        horizon=horizon,
        values=tuple(float(v) for v in total),
        model_label=model_label or f"recombined[{residual_f.model_label}]",
    )
