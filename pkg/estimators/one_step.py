"""
One-step TMLE
A single failure hazard fluctuated by small norm-bounded steps until the EIF
equation holds at every target time simultaneously
"""
import logging
import math
from typing import Union

import numpy as np
from scipy.special import expit, logit

from data.models import SurvivalDataset
from eif.influence import EifMatrix, clever_direction, clever_rows, eif_tolerance, event_rows
from glm.logistic import bernoulli_loglik, constrained_step
from nuisance.models import ArmPredictions, NuisanceFit
from .baseline import resolve_predictions
from .models import CurveEstimate, Method, TargetingTrace, TargetStep

logger = logging.getLogger(__name__)

STEP_BOUND = 0.01
STOP_NORM = 1e-3
MAX_ITER = 500
OSCILLATION_WINDOW = 10

CONVERGED_EXITS = ("eif_equation", "step_norm", "stationary")


def _block_starts(sub: np.ndarray) -> np.ndarray:
    """First row of each subject in rows ordered by subject"""
    return np.flatnonzero(np.r_[True, sub[1:] != sub[:-1]]) if sub.size else np.zeros(0, dtype=int)


def tmle_one_step(fit: Union[NuisanceFit, ArmPredictions], ds: SurvivalDataset, a: int,
                  step_bound: float = STEP_BOUND, stop_norm: float = STOP_NORM, penalty: str = "l2",
                  max_iter: int = MAX_ITER) -> CurveEstimate:
    """
    Target the whole curve psi(1..t_max) with one hazard.

    Every iteration re-evaluates the clever covariates h_{t'}(k) at the current
    survival (propensity and censoring fixed at their initial fits), stacks the
    observed rows of arm a into a rows x t_max matrix and takes one constrained
    logistic step eps with ||eps|| <= step_bound. The hazard grid then moves by
    logit hazard(k) += sum_{t'} h_{t'}(k) eps_{t'} for every subject.

    Exit reasons, checked at the top of each iteration on the current hazard:
    "eif_equation" once |mean EIF_t| is within eif_tolerance at every t,
    "step_norm" once the last step had ||eps|| <= stop_norm, "stationary" when
    the score vanishes, "max_iter" after max_iter steps. Only "max_iter" is
    reported as not converged. The output is the plug-in of a single survival
    matrix, so it is non-increasing in t.
    """
    preds = resolve_predictions(fit, ds, a)
    subject, k = ds.row_index()
    rows = preds.arm[subject] > 0
    sub, kk = subject[rows], k[rows]
    y = event_rows(ds)[rows]
    starts = _block_starts(sub)
    targeted = sub[starts]
    n = ds.n

    eta = logit(preds.hazard)
    trace = TargetingTrace()
    bound = step_bound
    rising = 0
    previous_crit = math.inf
    last_norm = math.inf
    exit_reason = "max_iter"
    iteration = 0

    while True:
        current = preds.with_hazard(expit(eta))
        psi = current.survival.mean(axis=0)
        H = clever_rows(current, sub, kk)
        d1 = np.zeros((n, ds.t_max))
        if sub.size:
            d1[targeted] = np.add.reduceat(H * (y - current.hazard[sub, kk - 1])[:, None], starts, axis=0)
        eif = EifMatrix(values=d1 + current.survival - psi, psi=psi, a=a, d1=d1)
        crit = eif.max_abs_mean()

        if np.all(np.abs(eif.mean()) <= eif_tolerance(eif.sigma(), n, stop_norm)):
            exit_reason = "eif_equation"
            break
        if last_norm <= stop_norm:
            exit_reason = "step_norm"
            break
        if iteration >= max_iter:
            break

        rising = rising + 1 if crit > previous_crit else 0
        previous_crit = crit
        if rising >= OSCILLATION_WINDOW and not trace.step_bound_halved:
            bound /= 2.0
            trace.step_bound_halved = True
            logger.warning(f"One-step TMLE arm {a}: |mean EIF| rose for {rising} iterations, step bound halved to {bound:g}")

        step = constrained_step(H, y, eta[sub, kk - 1], bound, penalty=penalty)
        if step.score_norm_at_zero == 0.0:
            exit_reason = "stationary"
            break
        iteration += 1
        eta = eta + clever_direction(current, step.epsilon)
        last_norm = step.norm
        trace.append(TargetStep(iteration, step.epsilon, step.norm, crit,
                                bernoulli_loglik(eta[sub, kk - 1], y)))
        logger.debug(f"one-step arm {a} iter {iteration}: ||eps||={step.norm:.3e}, "
                     f"max|mean EIF|={crit:.3e}, constrained={step.constraint_active}")

    converged = exit_reason in CONVERGED_EXITS
    if converged:
        logger.info(f"One-step TMLE ({penalty}) arm {a}: {exit_reason} after {iteration} steps "
                    f"(max|mean EIF|={crit:.3e})")
    else:
        logger.warning(f"One-step TMLE ({penalty}) arm {a}: no convergence in {max_iter} steps "
                       f"(max|mean EIF|={crit:.3e})")
    method = Method.MOSS_L1 if penalty == "l1" else Method.MOSS_L2
    return CurveEstimate(method, a, psi, eif=eif, trace=trace, converged=converged,
                         exit_reason=exit_reason, iterations=iteration)
