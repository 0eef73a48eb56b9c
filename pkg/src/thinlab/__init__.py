"""Thin and thick sequences in the unit disk: weights, series criteria,
constructions, witnesses and verdicts."""

__version__ = "0.1.0"

from .classifier import classify_sequence, compare_weight_classes, infer_rho, weight_regime  # noqa: E402
from .geometry import DiskPoint, PointSequence, build_profile, pseudo_distance, separation_constant  # noqa: E402
from .weights import Constant, LogL, LogPower, RhoSpec, Tabulated  # noqa: E402

__all__ = [
    "Constant",
    "DiskPoint",
    "LogL",
    "LogPower",
    "PointSequence",
    "RhoSpec",
    "Tabulated",
    "build_profile",
    "classify_sequence",
    "compare_weight_classes",
    "infer_rho",
    "pseudo_distance",
    "separation_constant",
    "weight_regime",
]
