"""
Method dispatch and treatment contrasts
"""
import logging
from typing import Union

from data.models import SurvivalDataset
from eif.influence import EifMatrix
from nuisance.models import ArmPredictions, NuisanceFit
from .baseline import ee, ipcw, kaplan_meier, plugin_curve
from .models import CurveEstimate, Method
from .one_step import MAX_ITER, STEP_BOUND, STOP_NORM, tmle_one_step
from .tmle import TMLE_MAX_ITER, TMLE_TOL, tmle_curve_iterative

logger = logging.getLogger(__name__)


def run_method(method: Union[Method, str], fit: Union[NuisanceFit, ArmPredictions], ds: SurvivalDataset,
               a: int, step_bound: float = STEP_BOUND, stop_norm: float = STOP_NORM,
               max_iter: int = MAX_ITER, tmle_max_iter: int = TMLE_MAX_ITER,
               tmle_tol: float = TMLE_TOL) -> CurveEstimate:
    """Run one estimator for arm a"""
    if isinstance(method, str):
        method = Method.parse(method)
    if method is Method.KM:
        return kaplan_meier(ds, a)
    if method is Method.PLUGIN:
        return plugin_curve(fit, ds, a)
    if method is Method.IPCW:
        return ipcw(fit, ds, a)
    if method is Method.EE:
        return ee(fit, ds, a)
    if method is Method.TMLE:
        return tmle_curve_iterative(fit, ds, a, max_iter=tmle_max_iter, tol=tmle_tol)
    return tmle_one_step(fit, ds, a, step_bound=step_bound, stop_norm=stop_norm,
                         penalty=method.penalty, max_iter=max_iter)


def difference_curve(treated: CurveEstimate, control: CurveEstimate) -> CurveEstimate:
    """
    Treatment-minus-control curve psi_1(t) - psi_0(t).

    The influence function of the difference is D1 - D0, each arm centered at
    its own psi.
    """
    if treated.method is not control.method:
        raise ValueError(f"Cannot contrast {treated.method.value} with {control.method.value}")
    if treated.psi.shape != control.psi.shape:
        raise ValueError("Arms were estimated on different time grids")
    eif = None
    if treated.eif is not None and control.eif is not None:
        eif = EifMatrix(values=treated.eif.values - control.eif.values,
                        psi=treated.eif.psi - control.eif.psi)
    return CurveEstimate(
        treated.method, None, treated.psi - control.psi, times=treated.times, eif=eif,
        converged=treated.converged and control.converged,
        exit_reason=treated.exit_reason if treated.exit_reason == control.exit_reason else "",
        contrast=f"{treated.a}-{control.a}",
    )
