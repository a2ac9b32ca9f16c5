"""
Classic iterative TMLE: one fluctuated hazard per target time
"""
import logging
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import expit, logit

from data.models import SurvivalDataset
from eif.influence import EifMatrix, clever_column, eif_column, eif_tolerance, event_rows
from glm.logistic import bernoulli_loglik, fit_logistic
from nuisance.models import ArmPredictions, NuisanceFit
from .baseline import resolve_predictions
from .models import CurveEstimate, Method, TargetingTrace, TargetStep

logger = logging.getLogger(__name__)

TMLE_MAX_ITER = 50
TMLE_TOL = 1e-3


@dataclass
class IterativeTarget:
    """Outcome of targeting a single time point"""
    t: int
    psi: float
    hazard: np.ndarray
    eif: np.ndarray
    trace: TargetingTrace
    converged: bool


def tmle_iterative(fit: Union[NuisanceFit, ArmPredictions], ds: SurvivalDataset, a: int, t: int,
                   max_iter: int = TMLE_MAX_ITER, tol: float = TMLE_TOL) -> IterativeTarget:
    """
    Target psi(t) alone.

    Each iteration regresses the event indicator of the observed rows k <= t of
    arm a on the scalar clever covariate h_t with offset logit(hazard), then moves
    the whole hazard grid by eps * h_t. Stops once |eps| <= tol and the EIF
    equation holds at t, |mean D_t| <= eif_tolerance(sigma_t, n, tol).
    """
    preds = resolve_predictions(fit, ds, a)
    if not 1 <= t <= ds.t_max:
        raise ValueError(f"Target time must lie in 1..{ds.t_max}, got {t}")

    subject, k = ds.row_index()
    rows = (k <= t) & (preds.arm[subject] > 0)
    sub, kk = subject[rows], k[rows] - 1
    y = event_rows(ds)[rows]

    eta = logit(preds.hazard)
    current = preds
    trace = TargetingTrace()
    converged = False
    for iteration in range(1, max_iter + 1):
        h_grid = clever_column(current, t)
        h = h_grid[sub, kk]
        if not np.any(h):
            converged = True
            break
        eps = float(fit_logistic(h[:, None], y, offset=eta[sub, kk]).coefficients[0])
        eta = eta + eps * h_grid
        current = preds.with_hazard(expit(eta))
        column = eif_column(current, ds, t, float(current.survival[:, t - 1].mean()))
        mean_eif = abs(float(column.mean()))
        trace.append(TargetStep(iteration, np.array([eps]), abs(eps), mean_eif,
                                bernoulli_loglik(eta[sub, kk], y), target_time=t))
        sigma = np.sqrt(np.mean(column ** 2))
        if abs(eps) <= tol and mean_eif <= eif_tolerance(sigma, ds.n, tol):
            converged = True
            break

    if not converged:
        logger.warning(f"Iterative TMLE at t={t} stopped after {max_iter} iterations without |eps| <= {tol} "
                       "and a solved EIF equation")
    psi_t = float(current.survival[:, t - 1].mean())
    return IterativeTarget(t=t, psi=psi_t, hazard=current.hazard, eif=eif_column(current, ds, t, psi_t),
                           trace=trace, converged=converged)


def tmle_curve_iterative(fit: Union[NuisanceFit, ArmPredictions], ds: SurvivalDataset, a: int,
                         max_iter: int = TMLE_MAX_ITER, tol: float = TMLE_TOL) -> CurveEstimate:
    """Run tmle_iterative for every t = 1..t_max and concatenate; monotonicity is not guaranteed"""
    preds = resolve_predictions(fit, ds, a)
    targets = [tmle_iterative(preds, ds, a, t, max_iter, tol) for t in ds.grid]
    psi = np.array([r.psi for r in targets])
    trace = TargetingTrace([step for r in targets for step in r.trace.steps])
    converged = all(r.converged for r in targets)
    eif = EifMatrix(values=np.column_stack([r.eif for r in targets]), psi=psi, a=a)
    logger.debug(f"Iterative TMLE arm {a}: {len(trace)} fluctuations over {ds.t_max} time points")
    return CurveEstimate(Method.TMLE, a, psi, eif=eif, trace=trace, converged=converged,
                         exit_reason="converged" if converged else "max_iter", iterations=len(trace))
