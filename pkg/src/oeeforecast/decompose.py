"""Additive multi-seasonal decomposition for nested hourly periods.

The series is split as input = trend + sum_p seasonal_p + residual for the
nested shift/day/week periods (8 | 24 | 168 by default). The scheme is the
classical moving-average one, iterated: each pass detrends with a centered
moving average at the period's width, re-estimates that period's seasonal
as per-phase means, centers it, and subtracts it before moving to the next
period. A second pass removes the seasonal leakage the first pass leaves
in the trend estimate. The residual is computed by exact subtraction, so
reconstruction is an identity by construction.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .series import TimeSeries

DEFAULT_PERIODS = (8, 24, 168)


@dataclass(frozen=True)
class DecompositionResult:
    trend: TimeSeries
    seasonal: dict[int, TimeSeries]  # period -> component, insertion-ordered ascending
    residual: TimeSeries
    periods: tuple[int, ...]

    @property
    def input_length(self) -> int:
        return len(self.trend)


def centered_moving_average(x: np.ndarray, window: int) -> np.ndarray:
    """Centered MA with the even-window half-weight convention.

    For even ``window`` the kernel spans window+1 points with half weights
    at both ends. Near the edges the window shrinks symmetrically to
    whatever fits (uniform weights there), so no points are dropped.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    half = window // 2
    out = np.empty(n)
    even = window % 2 == 0
    csum = np.concatenate(([0.0], np.cumsum(x)))
    for i in range(n):
        k = min(half, i, n - 1 - i)
        if k == half and even:
            # full even kernel: half-weight endpoints
            inner = csum[i + k] - csum[i - k + 1]  # x[i-k+1 .. i+k-1]
            out[i] = (inner + 0.5 * (x[i - k] + x[i + k])) / window
        else:
            out[i] = (csum[i + k + 1] - csum[i - k]) / (2 * k + 1)
    return out


def _phase_means(x: np.ndarray, period: int) -> np.ndarray:
    """Centered per-phase means, estimated away from the series edges.

    Samples whose moving-average window was truncated carry seasonal
    leftovers; including them biases the phase means by a phase-coherent
    amount, so only complete-window positions contribute.
    """
    n = x.size
    half = period // 2
    lo, hi = half, n - half
    means = np.empty(period)
    for ph in range(period):
        start = lo + (ph - lo) % period
        means[ph] = x[start:hi:period].mean()
    return means - means.mean()


def decompose(ts: TimeSeries, periods=DEFAULT_PERIODS, passes: int = 2) -> DecompositionResult:
    """Split a series into trend, one seasonal per period, and residual.

    Periods must be strictly increasing and nested (each divides the next);
    the series must cover at least two of the longest cycles.
    """
    periods = tuple(int(p) for p in periods)
    if not periods:
        raise ValueError("periods must be non-empty")
    for a, b in zip(periods, periods[1:]):
        if b <= a:
            raise ValueError(f"periods must be strictly increasing, got {periods}")
        if b % a != 0:
            raise ValueError(f"periods must be nested (each divides the next), got {periods}")
    n = len(ts)
    if n < 2 * periods[-1]:
        raise ValueError(f"series length {n} < 2 x max period {periods[-1]}")
    if passes < 1:
        raise ValueError("passes must be >= 1")

    x = ts.values.astype(float)
    idx = np.arange(n)
    seasonal = {p: np.zeros(n) for p in periods}

    # work = input minus all current seasonal estimates
    work = x.copy()
    for _ in range(passes):
        for p in periods:
            with_p = work + seasonal[p]
            trend_p = centered_moving_average(with_p, p)
            means = _phase_means(with_p - trend_p, p)
            seasonal[p] = means[idx % p]
            work = with_p - seasonal[p]

    trend = centered_moving_average(work, periods[-1])
    residual = x - trend - sum(seasonal.values())

    return DecompositionResult(
        trend=ts.with_values(trend),
        seasonal={p: ts.with_values(seasonal[p]) for p in periods},
        residual=ts.with_values(residual),
        periods=periods,
    )


def reconstruct(d: DecompositionResult) -> TimeSeries:
    """Element-wise sum of all components; inverse of decompose."""
    n = len(d.trend)
    total = d.trend.values.copy()
    for p, comp in d.seasonal.items():
        if len(comp) != n:
            raise ValueError(f"seasonal_{p} length {len(comp)} != trend length {n}")
        total = total + comp.values
    if len(d.residual) != n:
        raise ValueError(f"residual length {len(d.residual)} != trend length {n}")
    return d.trend.with_values(total + d.residual.values)


def components_to_csv(d: DecompositionResult, path) -> None:
    """One row per timestamp: observed components side by side."""
    header = ["timestamp", "trend"]
    header += [f"seasonal_{p}" for p in d.periods]
    header += ["residual"]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i in range(len(d.trend)):
            row = [d.trend.timestamp(i).isoformat(), repr(float(d.trend.values[i]))]
            row += [repr(float(d.seasonal[p].values[i])) for p in d.periods]
            row.append(repr(float(d.residual.values[i])))
            w.writerow(row)
