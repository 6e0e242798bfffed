"""Booking-pattern simulation, seat-inventory controls, and outlier-detection
benchmarking."""

__version__ = "0.1.0"

from .scenario import (
    BookingPattern,
    CustomerSegment,
    DemandScenario,
    FareStructure,
    ScenarioLabel,
    default_regular_scenario,
    demand_moments,
)
from .demand import (
    RequestStream,
    make_arrival_outlier,
    make_volume_outlier,
    make_wtp_outlier,
    sample_requests,
)
from .forecast import ForecastSet, forecast_demand, scenario_for_demand_factor
from .controls import (
    BookingControls,
    compute_controls,
    emsrb,
    emsrb_mr,
    fcfs_controls,
    marginal_revenue_transform,
    recompute_midhorizon,
)
from .simulate import (
    PatternCollection,
    build_collection,
    revenue_comparison,
    run_horizon,
    run_horizon_with_correction,
)
from .evaluate import (
    ConfusionCounts,
    RocCurve,
    bcr,
    foresight_sweep,
    hindsight_report,
    lr_plus,
    revenue_gain_experiment,
    roc_sweep,
)
from .extrapolate import (
    CompletedPattern,
    arima_extrapolate,
    complete_collection,
    igarch_extrapolate,
    ses_extrapolate,
)

__all__ = [
    "__version__",
    "BookingPattern",
    "CustomerSegment",
    "DemandScenario",
    "FareStructure",
    "ScenarioLabel",
    "default_regular_scenario",
    "demand_moments",
    "RequestStream",
    "sample_requests",
    "make_volume_outlier",
    "make_wtp_outlier",
    "make_arrival_outlier",
    "ForecastSet",
    "forecast_demand",
    "scenario_for_demand_factor",
    "BookingControls",
    "emsrb",
    "emsrb_mr",
    "fcfs_controls",
    "compute_controls",
    "marginal_revenue_transform",
    "recompute_midhorizon",
    "PatternCollection",
    "build_collection",
    "run_horizon",
    "run_horizon_with_correction",
    "revenue_comparison",
    "ConfusionCounts",
    "RocCurve",
    "bcr",
    "lr_plus",
    "roc_sweep",
    "foresight_sweep",
    "hindsight_report",
    "revenue_gain_experiment",
    "CompletedPattern",
    "ses_extrapolate",
    "arima_extrapolate",
    "igarch_extrapolate",
    "complete_collection",
]
