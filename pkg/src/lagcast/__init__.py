"""Forecasting monthly relative risk of a climate-sensitive disease.

Lagged climate effects enter through distributed-lag cross-bases; risk is
modelled with a zero-adjusted gamma regression or a random forest, climate is
forecast with a VAR, and prediction intervals come from a block bootstrap.
"""
from .basis import BasisSpec, CrossBasis, VariableBasis, bspline_basis, cross_basis, lag_basis
from .config import RunConfig, load_config
from .forest import ForestConfig, ForestModel, fit_forest, oob_rmse, predict_forest
from .gamlss import DesignMatrix, ZagaFit, assemble_design, fit_zaga, predict_response
from .metrics import ScoredForecast, best_model, nis, nrmse
from .panel import MonthIndex, MonthlyPanel, RiskSeries, align_panel, compute_relative_risk
from .pipeline import (
    CantonSpec,
    ForecastResult,
    bootstrap_intervals,
    evaluate,
    fit_canton,
    forecast_recursive,
    persistence_forecast,
    run_canton,
    run_panel,
)
from .simulate import SimConfig, simulate_panel
from .var import VarModel, fit_var, forecast_var, select_lag_bic
from .zadist import ZagaParams, ZaigParams, zaga_cdf, zaga_moments, zaga_pdf, zaga_sample

__version__ = "0.1.0"
