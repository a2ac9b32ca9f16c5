"""
Baseline estimators: Kaplan-Meier, G-computation plug-in, IPCW and the
estimating-equation (EE) correction
"""
import logging
from typing import Optional, Sequence, Union

import numpy as np

from data.models import SurvivalDataset
from eif.influence import clever_covariates, eif_matrix
from errors import DataError
from nuisance.fitting import predict_matrices
from nuisance.models import ArmPredictions, NuisanceFit
from .models import CurveEstimate, Method

logger = logging.getLogger(__name__)

FitInput = Union[NuisanceFit, ArmPredictions]


def resolve_predictions(fit: FitInput, ds: SurvivalDataset, a: int) -> ArmPredictions:
    """Accept a fitted nuisance or ready-made arm predictions"""
    if isinstance(fit, ArmPredictions):
        if fit.a != a:
            raise ValueError(f"Predictions are for arm {fit.a}, requested arm {a}")
        if fit.n != ds.n or fit.t_max != ds.t_max:
            raise ValueError("Predictions do not match the dataset shape")
        return fit
    return predict_matrices(fit, ds, a)


def kaplan_meier(ds: SurvivalDataset, a: int) -> CurveEstimate:
    """Product-limit estimate on the arm-a subsample"""
    in_arm = ds.A == a
    if not in_arm.any():
        raise DataError(f"Treatment arm {a} is empty")
    T, delta = ds.T[in_arm], ds.delta[in_arm]
    grid = ds.grid
    events = np.array([np.sum((T == k) & (delta == 1)) for k in grid], dtype=float)
    at_risk = np.array([np.sum(T >= k) for k in grid], dtype=float)
    hazard = np.divide(events, at_risk, out=np.zeros_like(events), where=at_risk > 0)
    return CurveEstimate(Method.KM, a, np.cumprod(1.0 - hazard))


def plugin_curve(fit: FitInput, ds: SurvivalDataset, a: int) -> CurveEstimate:
    """psi(t) = mean_i S(t | a, W_i), with the EIF at the initial fit attached"""
    preds = resolve_predictions(fit, ds, a)
    psi = preds.survival.mean(axis=0)
    eif = eif_matrix(clever_covariates(preds, ds), ds, preds, psi)
    return CurveEstimate(Method.PLUGIN, a, psi, eif=eif)


def ipcw(fit: FitInput, ds: SurvivalDataset, a: int, t_grid: Optional[Sequence[int]] = None) -> CurveEstimate:
    """
    psi(t) = (1/n) sum_i I(T_i > t, delta_i = 1, A_i = a) / (S_Ac(T_i | a, W_i) g_a(W_i))

    Only uncensored subjects carry weight. Values may leave [0, 1] and are
    reported unclipped.
    """
    preds = resolve_predictions(fit, ds, a)
    times = ds.grid if t_grid is None else np.asarray(t_grid, dtype=int)
    if times.size and (times.min() < 1 or times.max() > ds.t_max):
        raise ValueError(f"t_grid must lie in 1..{ds.t_max}")
    censor_at_t = preds.censor_survival[np.arange(ds.n), ds.T - 1]
    weights = preds.arm * ds.delta / (censor_at_t * preds.g_a)
    psi = np.array([np.mean(weights * (ds.T > t)) for t in times])
    return CurveEstimate(Method.IPCW, a, psi, times=times)


def ee(fit: FitInput, ds: SurvivalDataset, a: int) -> CurveEstimate:
    """IPCW plus the sample mean of the EIF evaluated at the initial fit"""
    preds = resolve_predictions(fit, ds, a)
    weighted = ipcw(preds, ds, a)
    eif = plugin_curve(preds, ds, a).eif
    psi = weighted.psi + eif.mean()
    estimate = CurveEstimate(Method.EE, a, psi, eif=eif)
    if not estimate.is_monotone():
        logger.debug(f"EE curve for arm {a} is not monotone")
    return estimate
