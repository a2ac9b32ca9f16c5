"""
Positivity diagnostics: the distribution of the inverse weights over time
"""
import logging

import numpy as np
import pandas as pd

from nuisance.models import ArmPredictions

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = ["Time", "Mean", "St.Dev.", "Min", "Pctl(25)", "Pctl(75)", "Max"]


def inverse_weight_summary(preds: ArmPredictions) -> pd.DataFrame:
    """Per-t distribution of 1 / (g_a(W_i) * S_Ac(t | a, W_i)) over all subjects"""
    weights = 1.0 / (preds.g_a[:, None] * preds.censor_survival)
    summary = pd.DataFrame({
        "Time": np.arange(1, preds.t_max + 1),
        "Mean": weights.mean(axis=0),
        "St.Dev.": weights.std(axis=0, ddof=1) if preds.n > 1 else np.full(preds.t_max, np.nan),
        "Min": weights.min(axis=0),
        "Pctl(25)": np.quantile(weights, 0.25, axis=0),
        "Pctl(75)": np.quantile(weights, 0.75, axis=0),
        "Max": weights.max(axis=0),
    }, columns=SUMMARY_COLUMNS)
    worst = float(summary["Max"].max())
    if worst > 100:
        logger.warning(f"Inverse weights reach {worst:.1f} for arm {preds.a}: practical positivity violation")
    return summary
