"""
Nuisance Fitting
Pooled logistic hazards, the propensity score and per-arm prediction grids
"""
import logging
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from data.models import LongRow, SurvivalDataset
from data.loader import to_long_frame
from errors import DataError
from glm.logistic import fit_logistic
from .basis import BasisSpec, NuisanceConfig, default_hazard_basis, default_propensity_basis
from .models import ArmPredictions, HazardModel, NuisanceFit, PropensityModel, hazard_to_survival

logger = logging.getLogger(__name__)

HAZARD_CLAMP = (1e-5, 1 - 1e-5)
PROPENSITY_BOUNDS = (0.01, 0.99)

LongInput = Union[pd.DataFrame, Sequence[LongRow]]


def _as_frame(long: LongInput, covariate_names: Optional[List[str]]) -> Tuple[pd.DataFrame, List[str]]:
    if isinstance(long, pd.DataFrame):
        names = covariate_names
        if names is None:
            names = [c for c in long.columns if c not in ("id", "k", "dN", "dAc", "at_risk", "a")]
        return long, list(names)
    rows = list(long)
    p = len(rows[0].w) if rows else 0
    names = list(covariate_names) if covariate_names else [f"w{j + 1}" for j in range(p)]
    frame = pd.DataFrame({
        "id": [r.id for r in rows], "k": [r.k for r in rows], "dN": [r.dN for r in rows],
        "dAc": [r.dAc for r in rows], "at_risk": [r.at_risk for r in rows], "a": [r.a for r in rows],
    })
    for j, name in enumerate(names):
        frame[name] = [r.w[j] for r in rows]
    return frame, names


def _fit_hazard(long: LongInput, response: str, basis: Optional[BasisSpec],
                covariate_names: Optional[List[str]], t_scale: Optional[float],
                clamp: Tuple[float, float]) -> HazardModel:
    frame, names = _as_frame(long, covariate_names)
    if "at_risk" in frame.columns:
        frame = frame[frame["at_risk"] == 1]
    if frame.empty:
        raise DataError(f"No at-risk person-time rows to fit the {response} hazard")

    basis = basis or default_hazard_basis()
    basis.validate_for(names, hazard=True)
    k = frame["k"].to_numpy()
    t_scale = float(t_scale or k.max())
    X = basis.design(frame[names].to_numpy(dtype=float), names, k=k, a=frame["a"].to_numpy(), t_scale=t_scale)
    y = frame[response].to_numpy(dtype=float)

    fit = fit_logistic(X, y)
    if fit.capped:
        logger.info(f"{response} hazard fit hit the coefficient cap (quasi-separation); predictions are clamped")
    elif not fit.converged:
        logger.warning(f"{response} hazard fit did not converge after {fit.iterations} iterations")
    logger.debug(f"{response} hazard: {len(y)} rows, {int(y.sum())} events, coefficients {np.round(fit.coefficients, 4)}")
    return HazardModel(basis=basis, coefficients=fit.coefficients, covariate_names=names, t_scale=t_scale,
                       clamp=clamp, response=response, converged=fit.converged)


def fit_failure_hazard(long: LongInput, basis: Optional[BasisSpec] = None,
                       covariate_names: Optional[List[str]] = None, t_scale: Optional[float] = None,
                       clamp: Tuple[float, float] = HAZARD_CLAMP) -> HazardModel:
    """Pooled logistic regression of dN on basis(k, A, W) over at-risk rows"""
    return _fit_hazard(long, "dN", basis, covariate_names, t_scale, clamp)


def fit_censor_hazard(long: LongInput, basis: Optional[BasisSpec] = None,
                      covariate_names: Optional[List[str]] = None, t_scale: Optional[float] = None,
                      clamp: Tuple[float, float] = HAZARD_CLAMP) -> HazardModel:
    """Same pooled fit with the censoring increment dAc as response"""
    return _fit_hazard(long, "dAc", basis, covariate_names, t_scale, clamp)


def fit_propensity(ds: SurvivalDataset, basis: Optional[BasisSpec] = None,
                   bounds: Tuple[float, float] = PROPENSITY_BOUNDS) -> PropensityModel:
    """Logistic regression of A on basis(W), predictions clamped to bounds"""
    arms = set(np.unique(ds.A).tolist())
    if arms != {0, 1}:
        raise DataError(f"Both treatment arms are required to fit the propensity score, found {sorted(arms)}")
    basis = basis or default_propensity_basis()
    basis.validate_for(ds.covariate_names, hazard=False)
    fit = fit_logistic(basis.design(ds.W, ds.covariate_names), ds.A.astype(float))
    if not fit.converged:
        logger.warning("Propensity fit did not converge; predictions rely on the clamp")
    return PropensityModel(basis=basis, coefficients=fit.coefficients,
                           covariate_names=list(ds.covariate_names), bounds=bounds, converged=fit.converged)


def fit_nuisance(ds: SurvivalDataset, cfg: Optional[NuisanceConfig] = None) -> NuisanceFit:
    """Fit the failure hazard, censoring hazard and propensity score on one dataset"""
    cfg = cfg or NuisanceConfig()
    long = to_long_frame(ds)
    names = list(ds.covariate_names)
    t_scale = float(ds.t_max)
    clamp = tuple(cfg.hazard_clamp)
    fit = NuisanceFit(
        failure_hazard=fit_failure_hazard(long, cfg.failure_basis, names, t_scale, clamp),
        censor_hazard=fit_censor_hazard(long, cfg.censor_basis, names, t_scale, clamp),
        propensity=fit_propensity(ds, cfg.propensity_basis, tuple(cfg.propensity_bounds)),
        empirical_W=ds.W,
        t_max=ds.t_max,
    )
    logger.info(f"Nuisance fitted on n={ds.n} ({len(long)} person-time rows, t_max={ds.t_max})")
    return fit


def predict_matrices(fit: NuisanceFit, ds: SurvivalDataset, a: int) -> ArmPredictions:
    """Hazard, survival and censoring grids for every subject with treatment set to a"""
    if a not in (0, 1):
        raise ValueError(f"Treatment level must be 0 or 1, got {a}")
    hazard = fit.failure_hazard.predict_grid(ds.W, a, ds.t_max)
    censor_survival = hazard_to_survival(fit.censor_hazard.predict_grid(ds.W, a, ds.t_max))
    censor_left = np.hstack([np.ones((ds.n, 1)), censor_survival[:, :-1]])
    g = fit.propensity.predict(ds.W)
    return ArmPredictions(
        a=a,
        hazard=hazard,
        survival=hazard_to_survival(hazard),
        censor_survival=censor_survival,
        censor_left=censor_left,
        g_a=g if a == 1 else 1.0 - g,
        arm=(ds.A == a).astype(float),
    )
