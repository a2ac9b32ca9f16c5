"""
Fitted nuisance models and their per-arm prediction grids
"""
from dataclasses import dataclass, field, replace
from typing import List, Tuple

import numpy as np
from scipy.special import expit

from .basis import BasisSpec


def hazard_to_survival(hazard: np.ndarray) -> np.ndarray:
    """S(t) = prod_{k<=t} (1 - hazard(k)) along the last axis; S(0) = 1 is implicit"""
    return np.cumprod(1.0 - np.asarray(hazard, dtype=float), axis=-1)


def survival_to_hazard(survival: np.ndarray) -> np.ndarray:
    """hazard(k) = 1 - S(k)/S(k-1); taken as 1 once S(k-1) = 0"""
    survival = np.asarray(survival, dtype=float)
    previous = np.concatenate([np.ones_like(survival[..., :1]), survival[..., :-1]], axis=-1)
    ratio = np.divide(survival, previous, out=np.zeros_like(survival), where=previous > 0)
    return 1.0 - ratio


@dataclass
class HazardModel:
    """Pooled logistic model of a discrete-time hazard"""
    basis: BasisSpec
    coefficients: np.ndarray
    covariate_names: List[str]
    t_scale: float
    clamp: Tuple[float, float] = (1e-5, 1 - 1e-5)
    response: str = "dN"
    converged: bool = True

    def predict(self, k: np.ndarray, a: np.ndarray, W: np.ndarray) -> np.ndarray:
        X = self.basis.design(W, self.covariate_names, k=k, a=a, t_scale=self.t_scale)
        return np.clip(expit(X @ self.coefficients), *self.clamp)

    def predict_grid(self, W: np.ndarray, a: int, t_max: int) -> np.ndarray:
        """n x t_max matrix of hazards at k = 1..t_max with treatment fixed to a"""
        n = W.shape[0]
        k = np.tile(np.arange(1, t_max + 1), n)
        rows = np.repeat(W, t_max, axis=0)
        return self.predict(k, np.full(k.size, a), rows).reshape(n, t_max)


@dataclass
class PropensityModel:
    """Logistic model of P(A=1 | W)"""
    basis: BasisSpec
    coefficients: np.ndarray
    covariate_names: List[str]
    bounds: Tuple[float, float] = (0.01, 0.99)
    converged: bool = True

    def predict(self, W: np.ndarray) -> np.ndarray:
        X = self.basis.design(W, self.covariate_names)
        return np.clip(expit(X @ self.coefficients), *self.bounds)


@dataclass
class NuisanceFit:
    """Initial estimates of the four likelihood components"""
    failure_hazard: HazardModel
    censor_hazard: HazardModel
    propensity: PropensityModel
    empirical_W: np.ndarray
    t_max: int

    @property
    def n(self) -> int:
        return self.empirical_W.shape[0]


@dataclass
class ArmPredictions:
    """
    Prediction grids for treatment fixed to a, one row per subject.

    censor_left holds the left limit S_Ac(k-1) with S_Ac(0) = 1. g_a is g for
    a = 1 and 1 - g for a = 0; arm is the indicator I(A_i = a).
    """
    a: int
    hazard: np.ndarray
    survival: np.ndarray
    censor_survival: np.ndarray
    censor_left: np.ndarray
    g_a: np.ndarray
    arm: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.hazard.shape[0]

    @property
    def t_max(self) -> int:
        return self.hazard.shape[1]

    def with_hazard(self, hazard: np.ndarray) -> "ArmPredictions":
        """Copy with an updated failure hazard; the censoring and treatment parts are kept"""
        return replace(self, hazard=hazard, survival=hazard_to_survival(hazard))
