"""
EIF package for clever covariates, influence values and weight diagnostics
"""

from eif.influence import (
    CleverTensor, EifMatrix, clever_rows, clever_direction, clever_column, clever_covariates, event_rows,
    eif_matrix, eif_column, eif_tolerance, pooled_loglik_along,
)
from eif.diagnostics import inverse_weight_summary, SUMMARY_COLUMNS

__all__ = [
    "CleverTensor", "EifMatrix", "clever_rows", "clever_direction", "clever_column", "clever_covariates",
    "event_rows", "eif_matrix", "eif_column", "eif_tolerance", "pooled_loglik_along",
    "inverse_weight_summary", "SUMMARY_COLUMNS",
]
