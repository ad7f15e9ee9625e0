"""Edge server selection: latency prediction, adaptive reliability scores,
hysteresis-moderated handover and a reproducible simulated evaluation."""

from ._mohan import (
    Decision,
    FeatureScaler,
    FeatureVector,
    FitReport,
    ModelCoefficients,
    PathDescriptor,
    ReliabilityState,
    RunStats,
    SelectorConfig,
    SweepResult,
    __version__,
    composite_score,
    fit,
    match_indicator,
    mohan_select,
    policies,
    predict_end_to_end,
    predict_hop,
    run_standard,
    sweep_standard,
)

__all__ = [
    "Decision",
    "FeatureScaler",
    "FeatureVector",
    "FitReport",
    "ModelCoefficients",
    "PathDescriptor",
    "ReliabilityState",
    "RunStats",
    "SelectorConfig",
    "SweepResult",
    "__version__",
    "composite_score",
    "fit",
    "match_indicator",
    "mohan_select",
    "policies",
    "predict_end_to_end",
    "predict_hop",
    "run_standard",
    "sweep_standard",
]
