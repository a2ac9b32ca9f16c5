import numpy as np
import pytest

from conftest import make_predictions
from data.models import SurvivalDataset
from eif.influence import eif_tolerance
from errors import DataError
from estimators.baseline import ee, ipcw, kaplan_meier, plugin_curve
from estimators.models import CurveEstimate, Method, TargetingTrace, TargetStep
from estimators.one_step import tmle_one_step
from estimators.runner import difference_curve, run_method
from estimators.tmle import tmle_curve_iterative, tmle_iterative
from nuisance.basis import BasisSpec, BasisTerm
from nuisance.fitting import fit_nuisance, predict_matrices
from simulation.dgp import DgpConfig, oracle_closed_form, simulate, simulation_nuisance_config


def _km_case() -> SurvivalDataset:
    return SurvivalDataset.from_arrays(W=np.zeros(6), A=[1, 1, 1, 1, 0, 0], T=[1, 2, 3, 3, 1, 2],
                                       delta=[1, 0, 1, 0, 1, 1])


def test_method_parse():
    assert Method.parse(" MOSS-L2 ") is Method.MOSS_L2
    assert Method.MOSS_L1.penalty == "l1"
    assert not Method.IPCW.supports_inference
    assert Method.EE.supports_inference
    with pytest.raises(ValueError):
        Method.parse("cox")


def test_curve_estimate_monotonicity_and_frame():
    estimate = CurveEstimate(Method.PLUGIN, 1, [1.0, 0.8, 0.8 + 1e-13, 0.5])
    assert estimate.is_monotone()
    assert not CurveEstimate(Method.EE, 1, [0.9, 0.95]).is_monotone()
    frame = estimate.to_frame()
    assert list(frame.columns) == ["method", "arm", "t", "psi"]
    assert frame["t"].tolist() == [1, 2, 3, 4]
    with pytest.raises(ValueError):
        CurveEstimate(Method.KM, None, [1.0])


def test_targeting_trace_frame():
    trace = TargetingTrace()
    trace.append(TargetStep(1, np.array([0.01]), 0.01, 0.2, -10.0))
    trace.append(TargetStep(2, np.array([0.005]), 0.005, 0.1, -9.5))
    assert len(trace) == 2
    np.testing.assert_allclose(trace.logliks(), [-10.0, -9.5])
    assert trace.to_frame()["iteration"].tolist() == [1, 2]


def test_kaplan_meier_by_hand():
    km = kaplan_meier(_km_case(), 1)
    np.testing.assert_allclose(km.psi, [0.75, 0.75, 0.375])
    np.testing.assert_allclose(kaplan_meier(_km_case(), 0).psi, [0.5, 0.0, 0.0])
    assert km.eif is None


def test_kaplan_meier_empty_arm():
    ds = SurvivalDataset.from_arrays(W=[0.0, 1.0], A=[1, 1], T=[1, 2], delta=[1, 0])
    with pytest.raises(DataError):
        kaplan_meier(ds, 0)


def test_ipcw_without_censoring_is_the_empirical_survival():
    ds = SurvivalDataset.from_arrays(W=np.zeros(2), A=[1, 1], T=[3, 3], delta=[1, 1])
    preds = make_predictions(np.full((2, 3), 0.2), g_a=np.ones(2), arm=np.ones(2))
    np.testing.assert_allclose(ipcw(preds, ds, 1).psi, [1.0, 1.0, 0.0])


def test_ipcw_is_reported_unclipped():
    ds = SurvivalDataset.from_arrays(W=np.zeros(2), A=[1, 1], T=[2, 2], delta=[1, 1])
    preds = make_predictions(np.full((2, 2), 0.2), g_a=[0.5, 0.5], arm=[1, 1])
    np.testing.assert_allclose(ipcw(preds, ds, 1).psi, [2.0, 0.0])
    np.testing.assert_allclose(ipcw(preds, ds, 1, t_grid=[1]).psi, [2.0])
    with pytest.raises(ValueError):
        ipcw(preds, ds, 1, t_grid=[3])


def test_predictions_for_the_wrong_arm_are_rejected(two_subject_case):
    ds, preds = two_subject_case
    with pytest.raises(ValueError):
        plugin_curve(preds, ds, 0)


def test_plugin_is_monotone_and_carries_eif(sim_ds, sim_fit):
    estimate = plugin_curve(sim_fit, sim_ds, 1)
    assert estimate.is_monotone()
    assert estimate.eif.values.shape == (sim_ds.n, sim_ds.t_max)
    np.testing.assert_allclose(estimate.eif.psi, estimate.psi)


def test_ee_is_ipcw_plus_mean_eif(sim_ds, sim_fit):
    for a in (0, 1):
        corrected = ee(sim_fit, sim_ds, a)
        weighted = ipcw(sim_fit, sim_ds, a)
        plugin = plugin_curve(sim_fit, sim_ds, a)
        np.testing.assert_allclose(corrected.psi - weighted.psi, plugin.eif.mean(), atol=1e-12)


def test_ipcw_two_subjects_by_hand():
    # only the treated subject carries weight 1 / 0.5, averaged over n = 2
    ds = SurvivalDataset.from_arrays(W=[0.0, 1.0], A=[1, 0], T=[5, 2], delta=[1, 0])
    preds = make_predictions(np.full((2, 5), 0.1), g_a=[0.5, 0.5], arm=[1, 0])
    np.testing.assert_allclose(ipcw(preds, ds, 1, t_grid=[3]).psi, [1.0])


@pytest.mark.parametrize("t", [6, 10, 14])
def test_iterative_tmle_solves_the_eif_equation(sim_ds, sim_fit, t):
    target = tmle_iterative(sim_fit, sim_ds, 1, t=t)
    assert 0.0 <= target.psi <= 1.0
    assert target.converged
    sigma = np.sqrt(np.mean(target.eif ** 2))
    assert abs(target.eif.mean()) <= eif_tolerance(sigma, sim_ds.n, 1e-3)


def test_iterative_tmle_rejects_bad_times(sim_ds, sim_fit):
    with pytest.raises(ValueError):
        tmle_iterative(sim_fit, sim_ds, 1, t=0)
    with pytest.raises(ValueError):
        tmle_iterative(sim_fit, sim_ds, 1, t=sim_ds.t_max + 1)


def test_iterative_tmle_curve(sim_ds, sim_fit):
    estimate = tmle_curve_iterative(sim_fit, sim_ds, 0)
    assert estimate.method is Method.TMLE
    assert estimate.psi.shape == (sim_ds.t_max,)
    assert np.all((estimate.psi >= 0) & (estimate.psi <= 1))
    assert estimate.eif.values.shape == (sim_ds.n, sim_ds.t_max)
    assert estimate.exit_reason == "converged"
    assert estimate.converged
    tolerance = eif_tolerance(estimate.eif.sigma(), sim_ds.n, 1e-3)
    assert np.all(np.abs(estimate.eif.mean()) <= tolerance)


def test_eif_tolerance_rate():
    sigma = np.array([1.0, 2.0])
    np.testing.assert_allclose(eif_tolerance(sigma, 100, stop_norm=1e-6), sigma / (10 * np.log(100)))
    np.testing.assert_allclose(eif_tolerance(sigma, 100, stop_norm=0.5), sigma * 0.5)


@pytest.mark.parametrize("penalty", ["l2", "l1"])
def test_one_step_tmle_converges_with_bounded_steps(sim_ds, sim_fit, penalty):
    estimate = tmle_one_step(sim_fit, sim_ds, 1, penalty=penalty)
    assert estimate.method is (Method.MOSS_L1 if penalty == "l1" else Method.MOSS_L2)
    assert estimate.converged
    assert estimate.exit_reason in ("eif_equation", "step_norm")
    assert estimate.is_monotone()
    assert np.all((estimate.psi >= 0) & (estimate.psi <= 1))
    assert estimate.iterations == len(estimate.trace)
    assert all(step.norm <= 0.01 + 1e-12 for step in estimate.trace.steps)
    if estimate.exit_reason == "eif_equation":
        tolerance = eif_tolerance(estimate.eif.sigma(), sim_ds.n)
        assert np.all(np.abs(estimate.eif.mean()) <= tolerance)


@pytest.mark.parametrize("penalty", ["l2", "l1"])
def test_one_step_likelihood_never_decreases(sim_ds, sim_fit, penalty):
    estimate = tmle_one_step(sim_fit, sim_ds, 0, penalty=penalty)
    logliks = estimate.trace.logliks()
    assert len(logliks) == estimate.iterations
    assert np.all(np.diff(logliks) >= -1e-8)


def test_one_step_tmle_stops_on_a_small_step(sim_ds, sim_fit):
    preds = predict_matrices(sim_fit, sim_ds, 1)
    inflated = preds.with_hazard(np.clip(preds.hazard * 3.0, 1e-5, 0.9))
    estimate = tmle_one_step(inflated, sim_ds, 1, stop_norm=0.02)
    assert estimate.exit_reason == "step_norm"
    assert estimate.converged
    assert estimate.iterations == 1
    assert estimate.trace.steps[0].norm <= 0.01 + 1e-12
    assert estimate.is_monotone()


def test_one_step_tmle_reports_max_iter_as_not_converged(sim_ds, sim_fit):
    preds = predict_matrices(sim_fit, sim_ds, 1)
    inflated = preds.with_hazard(np.clip(preds.hazard * 3.0, 1e-5, 0.9))
    estimate = tmle_one_step(inflated, sim_ds, 1, max_iter=2)
    assert estimate.exit_reason == "max_iter"
    assert not estimate.converged
    assert estimate.iterations == 2


def test_one_step_tmle_stops_at_once_when_already_solved(sim_ds, sim_fit):
    estimate = tmle_one_step(sim_fit, sim_ds, 1, stop_norm=1e6)
    assert estimate.exit_reason == "eif_equation"
    assert estimate.iterations == 0
    np.testing.assert_allclose(estimate.psi, plugin_curve(sim_fit, sim_ds, 1).psi)


def test_run_method_dispatch(sim_ds, sim_fit):
    assert run_method("km", sim_fit, sim_ds, 1).method is Method.KM
    assert run_method(Method.IPCW, sim_fit, sim_ds, 1).method is Method.IPCW


def test_difference_curve(sim_ds, sim_fit):
    treated = plugin_curve(sim_fit, sim_ds, 1)
    control = plugin_curve(sim_fit, sim_ds, 0)
    diff = difference_curve(treated, control)
    assert diff.contrast == "1-0"
    assert diff.arm_label == "1-0"
    np.testing.assert_allclose(diff.psi, treated.psi - control.psi)
    np.testing.assert_allclose(diff.eif.values, treated.eif.values - control.eif.values)
    with pytest.raises(ValueError):
        difference_curve(treated, kaplan_meier(sim_ds, 0))


@pytest.mark.slow
def test_double_robustness_with_a_misspecified_failure_hazard():
    ds = simulate(DgpConfig(n=2000, seed=41))
    correct = simulation_nuisance_config()
    constant = correct.model_copy(update={"failure_basis": BasisSpec(terms=[BasisTerm(kind="intercept")])})
    wrong_fit = fit_nuisance(ds, constant)
    right_fit = fit_nuisance(ds, correct)
    truth = oracle_closed_form(1, ds.grid)
    interior = (truth > 0.05) & (truth < 0.95)

    def error(estimate):
        return np.mean(np.abs(estimate.psi - truth)[interior])

    plugin_error = error(plugin_curve(wrong_fit, ds, 1))
    correct_error = max(error(tmle_one_step(right_fit, ds, 1)), 0.01)
    for targeted in (tmle_one_step(wrong_fit, ds, 1), ee(wrong_fit, ds, 1), tmle_curve_iterative(wrong_fit, ds, 1)):
        assert error(targeted) <= plugin_error / 3
        assert error(targeted) <= 3 * correct_error


@pytest.mark.slow
def test_one_step_curves_are_always_monotone():
    rng = np.random.default_rng(2024)
    runs = 0
    for n in (50, 100, 500):
        for rep in range(170):
            ds = simulate(DgpConfig(n=n, seed=10_000 * n + rep))
            fit = fit_nuisance(ds)
            a = rep % 2
            preds = predict_matrices(fit, ds, a)
            if rep % 3 == 0:
                # random multiplicative distortion of the initial hazard
                noise = np.exp(rng.normal(0.0, 1.0, size=preds.hazard.shape))
                preds = preds.with_hazard(np.clip(preds.hazard * noise, 1e-5, 1 - 1e-5))
            estimate = tmle_one_step(preds, ds, a, penalty="l1" if rep % 4 == 1 else "l2")
            assert estimate.is_monotone()
            assert np.all((estimate.psi >= 0) & (estimate.psi <= 1))
            runs += 1
    assert runs >= 500


@pytest.mark.slow
def test_one_step_matches_iterative_tmle_at_n1000():
    from analysis.metrics import interior_mask
    from simulation.study_engine import run_study

    report = run_study(DgpConfig(n=1000, seed=77), ["tmle", "moss-l2"], reps=100, arms=[1], coverage=False)
    interior = interior_mask(report.metric("tmle", 1, "oracle"))
    iterative = report.metric("tmle", 1, "mse")[interior].mean()
    one_step = report.metric("moss-l2", 1, "mse")[interior].mean()
    assert abs(one_step / iterative - 1.0) <= 0.15
