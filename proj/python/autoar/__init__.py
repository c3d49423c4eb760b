"""Auto-AR: autoregressive forecasting with KPSS differencing and BIC lookback selection."""

from ._autoar import (
    ArModel,
    AutoArError,
    ConfigError,
    DataError,
    KpssResult,
    NumericalError,
    aggregate_reference,
    auto_ar,
    decide_differencing,
    difference,
    evaluate,
    fit,
    forecast,
    integrate,
    kpss_level,
    load_csv,
    zero_shot_forecast,
)

__all__ = [
    "ArModel",
    "AutoArError",
    "ConfigError",
    "DataError",
    "KpssResult",
    "NumericalError",
    "aggregate_reference",
    "auto_ar",
    "decide_differencing",
    "difference",
    "evaluate",
    "fit",
    "forecast",
    "integrate",
    "kpss_level",
    "load_csv",
    "zero_shot_forecast",
]
