"""Hourly time-series container, CSV ingestion, diagnostics and error metrics.

Everything downstream (decomposition, feature extraction, model fitting)
consumes the :class:`TimeSeries` defined here. Series are immutable value
objects: the sample array is copied on construction and marked read-only,
so they can be shared freely between threads and cached without defensive
copies.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import datetime, timedelta

import numpy as np
from scipy import stats as sps

HOUR = timedelta(hours=1)

# Upper-tail KPSS critical values (statistic above the value => reject at
# that level). Standard tabulation, level and trend regressions.
_KPSS_CRIT = {
    "level": {0.10: 0.347, 0.05: 0.463, 0.025: 0.574, 0.01: 0.739},
    "trend": {0.10: 0.119, 0.05: 0.146, 0.025: 0.176, 0.01: 0.216},
}

BRACKET_LT_01 = "<0.01"
BRACKET_01_05 = "0.01-0.05"
BRACKET_05_10 = "0.05-0.10"
BRACKET_GT_10 = ">0.10"


class CsvError(ValueError):
    """Raised when a CSV file violates the expected input contract."""


@dataclass(frozen=True)
class TimeSeries:
    """Contiguous hourly series: value i is observed at start + i hours."""

    values: np.ndarray
    start: datetime = datetime(2000, 1, 1, 0)
    name: str = ""

    def __post_init__(self):
        arr = np.array(self.values, dtype=float, copy=True)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("TimeSeries needs a 1-d sequence with length >= 1")
        if not np.all(np.isfinite(arr)):
            raise ValueError("TimeSeries values must be finite (no NaN/inf)")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.size

    def timestamp(self, i: int) -> datetime:
        return self.start + i * HOUR

    @property
    def end(self) -> datetime:
        return self.timestamp(len(self) - 1)

    def slice(self, begin: int, stop: int) -> "TimeSeries":
        """Sub-series over [begin, stop), timestamps preserved."""
        if not (0 <= begin < stop <= len(self)):
            raise ValueError(f"bad slice [{begin}, {stop}) of length-{len(self)} series")
        return TimeSeries(self.values[begin:stop], self.start + begin * HOUR, self.name)

    def with_values(self, values) -> "TimeSeries":
        return TimeSeries(values, self.start, self.name)


@dataclass(frozen=True)
class SummaryStats:
    count: int
    mean: float
    std_dev: float
    min: float
    q25: float
    median: float
    q75: float
    max: float
    skewness: float
    kurtosis: float
    # True when skewness/kurtosis are undefined (zero variance); they are NaN then.
    moments_degenerate: bool = False


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value_bracket: str
    reject_at_5pct: bool


def load_csv(
    path,
    value_column: str,
    start: datetime | None = None,
    timestamp_column: str | None = None,
    fill_gaps: bool = False,
    name: str = "",
) -> TimeSeries:
    """Read one value column from a headered CSV into a TimeSeries.

    If ``timestamp_column`` is given it must hold ISO-8601 hour-resolution
    stamps; rows must be hourly-contiguous. Gaps of at most 3 hours are
    linearly interpolated when ``fill_gaps`` is true, anything else is an
    error (window features would silently straddle the hole otherwise).
    Without a timestamp column rows are taken as consecutive hours from
    ``start``.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if value_column not in header:
            raise CsvError(f"{path}: missing column {value_column!r} (have {header})")
        vcol = header.index(value_column)
        tcol = None
        if timestamp_column is not None:
            if timestamp_column not in header:
                raise CsvError(f"{path}: missing column {timestamp_column!r}")
            tcol = header.index(timestamp_column)

        values: list[float] = []
        stamps: list[datetime] = []
        for rownum, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                values.append(float(row[vcol]))
            except (ValueError, IndexError):
                cell = row[vcol] if vcol < len(row) else "<missing>"
                raise CsvError(
                    f"{path}: non-numeric value {cell!r} in column "
                    f"{value_column!r} at row {rownum}"
                ) from None
            if tcol is not None:
                try:
                    stamps.append(datetime.fromisoformat(row[tcol].strip()))
                except ValueError:
                    raise CsvError(f"{path}: bad timestamp {row[tcol]!r} at row {rownum}") from None

    if not values:
        raise CsvError(f"{path}: no data rows")

    if stamps:
        start = stamps[0].replace(minute=0, second=0, microsecond=0)
        filled = [values[0]]
        expected = start
        for k in range(1, len(stamps)):
            expected = expected + HOUR
            stamp = stamps[k].replace(minute=0, second=0, microsecond=0)
            gap = int(round((stamp - expected) / HOUR))
            if gap < 0:
                raise CsvError(f"{path}: timestamps not increasing at row {k + 1}")
            if gap > 0:
                if not fill_gaps or gap > 3:
                    raise CsvError(
                        f"{path}: {gap}-hour gap before row {k + 1}"
                        + ("" if fill_gaps else " (pass fill_gaps=True for gaps <= 3h)")
                    )
                lo, hi = filled[-1], values[k]
                for g in range(1, gap + 1):
                    filled.append(lo + (hi - lo) * g / (gap + 1))
                expected = stamp
            filled.append(values[k])
        values = filled
    elif start is None:
        start = datetime(2000, 1, 1, 0)

    return TimeSeries(np.asarray(values), start, name or str(value_column))


def summary_stats(ts: TimeSeries) -> SummaryStats:
    """Descriptive statistics; sample (n-1) std, adjusted skewness, excess kurtosis."""
    x = ts.values
    n = x.size
    if n < 2:
        raise ValueError("summary_stats needs length >= 2")
    q25, med, q75 = np.quantile(x, [0.25, 0.5, 0.75])
    std = float(np.std(x, ddof=1))
    if std == 0.0:
        skew = kurt = math.nan
        degenerate = True
    else:
        skew = float(sps.skew(x, bias=False))
        kurt = float(sps.kurtosis(x, fisher=True, bias=False))
        degenerate = not (math.isfinite(skew) and math.isfinite(kurt))
    return SummaryStats(
        count=n,
        mean=float(np.mean(x)),
        std_dev=std,
        min=float(np.min(x)),
        q25=float(q25),
        median=float(med),
        q75=float(q75),
        max=float(np.max(x)),
        skewness=skew,
        kurtosis=kurt,
        moments_degenerate=degenerate,
    )


def _bracket_from_stat(stat: float, crit: dict[float, float]) -> tuple[str, bool]:
    if stat > crit[0.01]:
        return BRACKET_LT_01, True
    if stat > crit[0.05]:
        return BRACKET_01_05, True
    if stat > crit[0.10]:
        return BRACKET_05_10, False
    return BRACKET_GT_10, False


def kpss_test(ts: TimeSeries, regression: str = "level", lags: int | str = "auto") -> TestResult:
    """KPSS stationarity test (null: stationary around a level or trend).

    Long-run variance uses the Bartlett kernel; the automatic bandwidth is
    floor(12 * (n/100)^0.25). The p-value is bracketed from the standard
    critical-value table, which is all the downstream decision needs.
    """
    x = ts.values.astype(float)
    n = x.size
    if n < 20:
        raise ValueError("kpss_test needs length >= 20")
    if regression not in _KPSS_CRIT:
        raise ValueError(f"regression must be 'level' or 'trend', got {regression!r}")
    if np.ptp(x) == 0.0:
        raise ValueError("kpss_test undefined for a zero-variance series")

    if regression == "level":
        resid = x - x.mean()
    else:
        t = np.arange(n, dtype=float)
        beta = np.polyfit(t, x, 1)
        resid = x - np.polyval(beta, t)

    if lags == "auto":
        lags = int(math.floor(12.0 * (n / 100.0) ** 0.25))
    lags = int(lags)
    if lags < 0 or lags >= n:
        raise ValueError(f"lags must be in [0, n), got {lags}")

    s_cumsum = np.cumsum(resid)
    eta = float(np.sum(s_cumsum**2)) / (n * n)

    lrv = float(np.sum(resid * resid)) / n
    for j in range(1, lags + 1):
        gamma_j = float(np.sum(resid[j:] * resid[:-j])) / n
        lrv += 2.0 * (1.0 - j / (lags + 1.0)) * gamma_j

    stat = eta / lrv
    bracket, reject = _bracket_from_stat(stat, _KPSS_CRIT[regression])
    return TestResult(statistic=stat, p_value_bracket=bracket, reject_at_5pct=reject)


def acf_values(x: np.ndarray, max_lag: int) -> np.ndarray:
    """Biased (divide-by-n) autocorrelation for lags 0..max_lag."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if max_lag >= n / 2:
        raise ValueError(f"max_lag {max_lag} must be < length/2 = {n / 2}")
    xc = x - x.mean()
    c0 = float(np.dot(xc, xc)) / n
    if c0 == 0.0:
        raise ValueError("acf undefined for a zero-variance series")
    out = np.empty(max_lag + 1)
    out[0] = 1.0
    for k in range(1, max_lag + 1):
        out[k] = (float(np.dot(xc[k:], xc[:-k])) / n) / c0
    return out


def pacf_values(x: np.ndarray, max_lag: int) -> np.ndarray:
    """Partial autocorrelation via the Durbin-Levinson recursion; index 0 is 1."""
    rho = acf_values(x, max_lag)
    pacf = np.empty(max_lag + 1)
    pacf[0] = 1.0
    if max_lag == 0:
        return pacf
    phi_prev = np.array([rho[1]])
    pacf[1] = rho[1]
    for k in range(2, max_lag + 1):
        num = rho[k] - float(np.dot(phi_prev, rho[k - 1 : 0 : -1]))
        den = 1.0 - float(np.dot(phi_prev, rho[1:k]))
        phi_kk = num / den if den != 0.0 else 0.0
        phi = np.empty(k)
        phi[:-1] = phi_prev - phi_kk * phi_prev[::-1]
        phi[-1] = phi_kk
        pacf[k] = phi_kk
        phi_prev = phi
    return pacf


def acf(ts: TimeSeries, max_lag: int) -> np.ndarray:
    return acf_values(ts.values, max_lag)


def pacf(ts: TimeSeries, max_lag: int) -> np.ndarray:
    return pacf_values(ts.values, max_lag)


def mae(actual, predicted) -> float:
    a = np.asarray(actual, dtype=float)
    p = np.asarray(predicted, dtype=float)
    if a.shape != p.shape or a.size < 1:
        raise ValueError(f"length mismatch: {a.shape} vs {p.shape}")
    return float(np.mean(np.abs(a - p)))


def mape(actual, predicted) -> float:
    """Mean absolute percentage error as a fraction (0.07 means 7%)."""
    a = np.asarray(actual, dtype=float)
    p = np.asarray(predicted, dtype=float)
    if a.shape != p.shape or a.size < 1:
        raise ValueError(f"length mismatch: {a.shape} vs {p.shape}")
    if np.any(a == 0.0):
        raise ValueError("mape undefined: actual contains zero")
    return float(np.mean(np.abs(a - p) / np.abs(a)))


def ljung_box(residuals, lags: int, fit_df: int = 0) -> TestResult:
    """Ljung-Box whiteness test on residuals; df adjusted by fitted parameters."""
    x = np.asarray(residuals, dtype=float)
    n = x.size
    r = acf_values(x, lags)
    q = n * (n + 2.0) * float(np.sum(r[1:] ** 2 / (n - np.arange(1, lags + 1))))
    df = max(1, lags - fit_df)
    p = float(sps.chi2.sf(q, df))
    if p < 0.01:
        bracket = BRACKET_LT_01
    elif p < 0.05:
        bracket = BRACKET_01_05
    elif p < 0.10:
        bracket = BRACKET_05_10
    else:
        bracket = BRACKET_GT_10
    return TestResult(statistic=q, p_value_bracket=bracket, reject_at_5pct=p < 0.05)
