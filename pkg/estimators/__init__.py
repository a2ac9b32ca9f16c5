"""
Estimators package for counterfactual survival curves
"""

from estimators.models import Method, CurveEstimate, TargetingTrace, TargetStep, MONOTONE_TOL
from estimators.baseline import kaplan_meier, plugin_curve, ipcw, ee, resolve_predictions
from estimators.tmle import IterativeTarget, tmle_iterative, tmle_curve_iterative
from estimators.one_step import tmle_one_step, eif_tolerance
from estimators.runner import run_method, difference_curve

__all__ = [
    "Method", "CurveEstimate", "TargetingTrace", "TargetStep", "MONOTONE_TOL",
    "kaplan_meier", "plugin_curve", "ipcw", "ee", "resolve_predictions",
    "IterativeTarget", "tmle_iterative", "tmle_curve_iterative",
    "tmle_one_step", "eif_tolerance", "run_method", "difference_curve",
]
