"""
Analysis package
Monte-Carlo metrics and the study report model
"""

from analysis.metrics import curve_metrics, relative_efficiency, interior_mask, monotone_fraction
from analysis.models import StudyReport, RepFailure, METRIC_COLUMNS, SUMMARY_COLUMNS

__all__ = [
    "curve_metrics", "relative_efficiency", "interior_mask", "monotone_fraction",
    "StudyReport", "RepFailure", "METRIC_COLUMNS", "SUMMARY_COLUMNS",
]
