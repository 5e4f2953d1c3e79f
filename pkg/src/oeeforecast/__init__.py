"""Forecasting engine for short, volatile hourly equipment-efficiency series.

Pipeline: additive multi-seasonal decomposition -> statistical and
topological window features on the residual -> p-value / BIC feature
selection -> seasonal ARMA with exogenous regressors for the residual,
ETS for the trend, seasonal naive for the cycles -> recombined, clamped
forecasts with a rolling-origin benchmark harness and a file-backed
serving endpoint.
"""

from .decompose import DecompositionResult, decompose, reconstruct
from .feature_matrix import FeatureMatrix
from .forecasters import (
    EtsFit,
    ForecastResult,
    OEE_MAX,
    OEE_MIN,
    ets_fit,
    ets_forecast,
    recombine_forecasts,
    seasonal_naive_forecast,
)
from .pipeline import (
    EvaluationReport,
    PipelineConfig,
    benchmark,
    leakage_audit,
    rolling_forecast,
)
from .selection import (
    PsoConfig,
    PsoResult,
    SelectionReport,
    correlation_filter,
    pso_bic,
    rfe_sarimax,
    variance_filter,
)
from .series import (
    SummaryStats,
    TestResult,
    TimeSeries,
    acf,
    kpss_test,
    load_csv,
    ljung_box,
    mae,
    mape,
    pacf,
    summary_stats,
)
from .sarimax import SarimaxFit, SarimaxSpec, bic_of, fit, forecast, simulate
from .stat_features import extract_stat_features
from .tda import TdaParams, extract_tda_features, takens_embed, vr_persistence

__version__ = "0.1.0"
