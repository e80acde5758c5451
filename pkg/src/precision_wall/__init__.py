"""Structural precision limits for rare-event binary flags.

A deterministic library and CLI around three facts about "high risk" flags:
the PPV a flag can achieve is pinned down by its likelihood ratio and the
outcome base rate; monotone recalibration cannot change that likelihood
ratio; and group-asymmetric marker accumulation puts a group-specific
ceiling on achievable LR and PPV.
"""

__version__ = "0.1.0"

from .bounds import (
    BaseRate,
    BenchmarkBand,
    OperatingPoint,
    PrecisionSummary,
    benchmark_compare,
    nnd_from_ppv,
    ppv_from_lr,
    ppv_from_rates,
    projection_table,
    required_lr,
    required_lr_table,
    wall_curve,
)
from .calibration import (
    ExpressionTransform,
    IsotonicCalibrator,
    PlattCalibrator,
    StepTransform,
    apply_transform,
    fit_isotonic,
    fit_platt,
    flat_region_report,
    lr_invariance_check,
)
from .ceiling import (
    GroupFeatureModel,
    ThresholdRule,
    ceiling_sweep,
    classifier_rates,
    count_pmf,
    fpr_ratio_slope,
    kl_rate,
    table2_scenario,
    variant_scenario,
)
from .metrics import (
    AuditRecord,
    ConfusionCounts,
    CutoffSpec,
    IntervalEstimate,
    auc_rank_estimate,
    binormal_operating_point,
    confusion_at_cutoff,
    group_amplification,
    lr_with_ci,
    operating_point_with_ci,
    projected_ppv,
)
from .records import RecordSchema, load_records
from .report import render_uncertainty_label, wall_figure_rows

__all__ = [
    "__version__",
    "BaseRate",
    "BenchmarkBand",
    "OperatingPoint",
    "PrecisionSummary",
    "benchmark_compare",
    "nnd_from_ppv",
    "ppv_from_lr",
    "ppv_from_rates",
    "projection_table",
    "required_lr",
    "required_lr_table",
    "wall_curve",
    "ExpressionTransform",
    "IsotonicCalibrator",
    "PlattCalibrator",
    "StepTransform",
    "apply_transform",
    "fit_isotonic",
    "fit_platt",
    "flat_region_report",
    "lr_invariance_check",
    "GroupFeatureModel",
    "ThresholdRule",
    "ceiling_sweep",
    "classifier_rates",
    "count_pmf",
    "fpr_ratio_slope",
    "kl_rate",
    "table2_scenario",
    "variant_scenario",
    "AuditRecord",
    "ConfusionCounts",
    "CutoffSpec",
    "IntervalEstimate",
    "auc_rank_estimate",
    "binormal_operating_point",
    "confusion_at_cutoff",
    "group_amplification",
    "lr_with_ci",
    "operating_point_with_ci",
    "projected_ppv",
    "RecordSchema",
    "load_records",
    "render_uncertainty_label",
    "wall_figure_rows",
]
