"""
Monte-Carlo performance metrics for curve estimators
"""
from typing import Dict

import numpy as np


def interior_mask(truth: np.ndarray) -> np.ndarray:
    """Time points where the true curve is strictly inside (0, 1)"""
    truth = np.asarray(truth, dtype=float)
    return (truth > 0.0) & (truth < 1.0)


def curve_metrics(estimates: np.ndarray, truth: np.ndarray) -> Dict[str, np.ndarray]:
    """
    Bias, variance and MSE per time point over Monte-Carlo replicates.

    Variance is the population variance of the replicates (ddof=0) so that
    MSE = bias^2 + variance holds on the sample.

    Args:
        estimates: reps x t_max array of estimated curves
        truth: true curve of length t_max
    """
    estimates = np.atleast_2d(np.asarray(estimates, dtype=float))
    truth = np.asarray(truth, dtype=float)
    if estimates.shape[1] != truth.size:
        raise ValueError(f"estimates have {estimates.shape[1]} time points, truth has {truth.size}")
    bias = estimates.mean(axis=0) - truth
    variance = estimates.var(axis=0)
    mse = np.mean((estimates - truth) ** 2, axis=0)
    return {"bias": bias, "var": variance, "mse": mse}


def relative_efficiency(mse_reference: np.ndarray, mse: np.ndarray) -> np.ndarray:
    """MSE_reference / MSE; NaN where the method's MSE is zero"""
    mse_reference = np.asarray(mse_reference, dtype=float)
    mse = np.asarray(mse, dtype=float)
    return np.divide(mse_reference, mse, out=np.full(mse.shape, np.nan), where=mse > 0)


def monotone_fraction(flags) -> float:
    flags = np.asarray(list(flags), dtype=bool)
    return float(flags.mean()) if flags.size else float("nan")
