"""
Clever covariates and the efficient influence function of the survival curve
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import logit

from data.models import SurvivalDataset
from glm.logistic import bernoulli_loglik
from nuisance.models import ArmPredictions

logger = logging.getLogger(__name__)

SURVIVAL_FLOOR = 1e-12
EIF_FLOOR = 1e-6


@dataclass
class CleverTensor:
    """
    Clever covariates on the observed person-time rows.

    values[r, t'] is h_{t'}(k_r, A_i, W_i) for row r = (subject i, time k_r), rows
    ordered by (subject, k) as in SurvivalDataset.row_index(). Entries vanish when
    k > t' or A_i != a.
    """
    values: np.ndarray
    subject: np.ndarray
    k: np.ndarray
    row_starts: np.ndarray
    a: int

    @property
    def t_max(self) -> int:
        return self.values.shape[1]

    def subject_block(self, i: int) -> np.ndarray:
        """t_tilde_i x t_max block of subject i"""
        start = self.row_starts[i]
        stop = self.row_starts[i + 1] if i + 1 < self.row_starts.size else self.values.shape[0]
        return self.values[start:stop]


@dataclass
class EifMatrix:
    """Influence values D[i, t] and the curve used to center them"""
    values: np.ndarray
    psi: np.ndarray
    a: Optional[int] = None
    d1: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def mean(self) -> np.ndarray:
        return self.values.mean(axis=0)

    def sigma(self) -> np.ndarray:
        """sigma_t = sqrt(mean_i D[i, t]^2)"""
        return np.sqrt(np.mean(self.values ** 2, axis=0))

    def max_abs_mean(self) -> float:
        return float(np.max(np.abs(self.mean())))


def _denominator(preds: ArmPredictions) -> np.ndarray:
    return np.maximum(preds.g_a[:, None] * preds.censor_left, SURVIVAL_FLOOR)


def eif_tolerance(sigma: np.ndarray, n: int, stop_norm: float = 1e-3, floor: float = EIF_FLOOR) -> np.ndarray:
    """
    Per-t threshold on |mean EIF|: sigma_t * max(stop_norm, 1 / (sqrt(n) log n)),
    never below floor. Where sigma_t underflows (survival pinned at 0 or 1 for
    every subject) the mean is rounding noise and the floor applies.
    """
    rate = 1.0 / (math.sqrt(n) * math.log(n)) if n > 1 else 0.0
    return np.maximum(np.asarray(sigma, dtype=float) * max(stop_norm, rate), floor)


def clever_rows(preds: ArmPredictions, subject: np.ndarray, k: np.ndarray,
                survival: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Counterfactual clever covariates h_{t'}(k_r, a, W_i) on the rows
    r = (subject[r], k[r]), shape rows x t_max; zero where t' < k_r.

    No I(A_i = a) factor: callers restrict to the arm they target.
    """
    S = preds.survival if survival is None else survival
    at_k = np.maximum(S[subject, k - 1], SURVIVAL_FLOOR) * _denominator(preds)[subject, k - 1]
    values = -S[subject] / at_k[:, None]
    values[np.arange(1, preds.t_max + 1)[None, :] < k[:, None]] = 0.0
    return values


def clever_direction(preds: ArmPredictions, eps: np.ndarray, survival: Optional[np.ndarray] = None) -> np.ndarray:
    """
    sum_{t'} h_{t'}(k, a, W_i) eps_{t'} for every subject and every k, n x t_max.

    h_{t'}(k) carries S(t') only for t' >= k, so the sum is a reverse cumulative
    sum of S * eps divided by S(k) and the k-th denominator.
    """
    S = preds.survival if survival is None else survival
    eps = np.asarray(eps, dtype=float)
    if eps.shape != (preds.t_max,):
        raise ValueError(f"eps has shape {eps.shape}, expected ({preds.t_max},)")
    tail = np.cumsum((S * eps)[:, ::-1], axis=1)[:, ::-1]
    return -tail / (np.maximum(S, SURVIVAL_FLOOR) * _denominator(preds))


def clever_column(preds: ArmPredictions, t: int, survival: Optional[np.ndarray] = None) -> np.ndarray:
    """h_t(k, a, W_i) for a single target time, n x t_max"""
    S = preds.survival if survival is None else survival
    h = -(S[:, [t - 1]] / np.maximum(S, SURVIVAL_FLOOR)) / _denominator(preds)
    h[:, t:] = 0.0
    return h


def clever_covariates(preds: ArmPredictions, ds: SurvivalDataset) -> CleverTensor:
    """Clever covariates on every observed row, times I(A_i = a)"""
    subject, k = ds.row_index()
    values = clever_rows(preds, subject, k) * preds.arm[subject][:, None]
    return CleverTensor(values=values, subject=subject, k=k, row_starts=ds.row_starts(), a=preds.a)


def event_rows(ds: SurvivalDataset) -> np.ndarray:
    """I(T_i = k, delta_i = 1) on the observed person-time rows"""
    subject, k = ds.row_index()
    return ((k == ds.T[subject]) & (ds.delta[subject] == 1)).astype(float)


def eif_matrix(h: CleverTensor, ds: SurvivalDataset, preds: ArmPredictions,
               psi: Optional[np.ndarray] = None) -> EifMatrix:
    """
    D[i, t] = sum_{k <= t_tilde_i} h[i, k, t] (I(T_i = k, delta_i = 1) - hazard(k | a, W_i))
              + S(t | a, W_i) - psi(t)

    psi defaults to the plug-in mean of preds.survival.
    """
    if psi is None:
        psi = preds.survival.mean(axis=0)
    psi = np.asarray(psi, dtype=float)
    if psi.shape != (preds.t_max,):
        raise ValueError(f"psi has length {psi.shape}, expected {preds.t_max}")
    residual = event_rows(ds) - preds.hazard[h.subject, h.k - 1]
    d1 = np.add.reduceat(h.values * residual[:, None], h.row_starts, axis=0)
    return EifMatrix(values=d1 + preds.survival - psi, psi=psi, a=preds.a, d1=d1)


def eif_column(preds: ArmPredictions, ds: SurvivalDataset, t: int, psi_t: float) -> np.ndarray:
    """Influence values at a single target time t"""
    subject, k = ds.row_index()
    h = clever_column(preds, t)[subject, k - 1] * preds.arm[subject]
    residual = event_rows(ds) - preds.hazard[subject, k - 1]
    d1 = np.add.reduceat(h * residual, ds.row_starts())
    return d1 + preds.survival[:, t - 1] - psi_t


def pooled_loglik_along(preds: ArmPredictions, ds: SurvivalDataset, column: int, eps: float) -> float:
    """
    Mean (over subjects) pooled Bernoulli log-likelihood of the observed event
    process after the fluctuation logit hazard + eps * h_{t'} for t' = column.
    """
    h = clever_covariates(preds, ds)
    hazard_rows = np.clip(preds.hazard[h.subject, h.k - 1], SURVIVAL_FLOOR, 1 - SURVIVAL_FLOOR)
    eta = logit(hazard_rows) + eps * h.values[:, column - 1]
    return bernoulli_loglik(eta, event_rows(ds)) / ds.n
