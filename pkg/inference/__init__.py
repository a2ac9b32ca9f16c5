"""
Inference package for EIF-based confidence intervals and bands
"""

from inference.bands import (
    BandResult, pointwise_ci, simultaneous_band, correlation_from_covariance, max_abs_quantile, BAND_COLUMNS,
)

__all__ = [
    "BandResult", "pointwise_ci", "simultaneous_band", "correlation_from_covariance",
    "max_abs_quantile", "BAND_COLUMNS",
]
