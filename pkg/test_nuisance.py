import numpy as np
import pytest
from pydantic import ValidationError
from scipy.special import expit

from data.loader import to_long, to_long_frame
from data.models import SurvivalDataset
from errors import ConfigError, DataError
from nuisance.basis import BasisSpec, BasisTerm, NuisanceConfig, default_hazard_basis
from nuisance.fitting import fit_censor_hazard, fit_failure_hazard, fit_propensity, predict_matrices
from nuisance.models import hazard_to_survival, survival_to_hazard
from simulation.dgp import DgpConfig, simulate, simulation_nuisance_config


def test_hazard_survival_round_trip():
    hazard = np.array([[0.1, 0.2, 0.5], [0.0, 0.3, 1.0]])
    survival = hazard_to_survival(hazard)
    np.testing.assert_allclose(survival[0], [0.9, 0.72, 0.36])
    np.testing.assert_allclose(survival_to_hazard(survival), hazard)


def test_survival_to_hazard_after_zero_survival():
    np.testing.assert_allclose(survival_to_hazard(np.array([0.5, 0.0, 0.0])), [0.5, 1.0, 1.0])


def test_design_columns_and_labels():
    spec = BasisSpec(terms=[
        BasisTerm(kind="intercept"),
        BasisTerm(kind="time", degree=2),
        BasisTerm(kind="treatment_covariate", covariate="x"),
        BasisTerm(kind="indicator", covariate="x", threshold=0.5),
    ])
    W = np.array([[0.2, 9.0], [0.8, 9.0]])
    X = spec.design(W, ["x", "z"], k=np.array([2, 4]), a=np.array([1, 0]), t_scale=4.0)
    np.testing.assert_allclose(X, [[1.0, 0.5, 0.25, 0.2, 0.0], [1.0, 1.0, 1.0, 0.0, 1.0]])
    assert spec.column_names(["x", "z"]) == ["intercept", "time^1", "time^2", "a*x", "indicator:x:>0.5"]


def test_indicator_needs_threshold():
    with pytest.raises(ValidationError):
        BasisTerm(kind="indicator", covariate="x")


def test_basis_validation_against_data():
    with pytest.raises(ConfigError):
        default_hazard_basis().validate_for(["x"], hazard=False)
    with pytest.raises(ConfigError):
        BasisSpec(terms=[BasisTerm(kind="covariate", covariate="age")]).validate_for(["x"])


def test_nuisance_config_rejects_bad_clamp():
    with pytest.raises(ValidationError):
        NuisanceConfig(hazard_clamp=(0.5, 0.1))


def test_pooled_fit_accepts_rows_or_frame(sim_ds):
    from_frame = fit_failure_hazard(to_long_frame(sim_ds), covariate_names=["W"], t_scale=21.0)
    from_rows = fit_failure_hazard(to_long(sim_ds), covariate_names=["W"], t_scale=21.0)
    np.testing.assert_allclose(from_frame.coefficients, from_rows.coefficients)


def test_pooled_fit_needs_rows():
    frame = to_long_frame(SurvivalDataset.from_arrays(W=[0.0], A=[1], T=[1], delta=[1]))
    frame["at_risk"] = 0
    with pytest.raises(DataError):
        fit_failure_hazard(frame)


def test_propensity_needs_both_arms():
    ds = SurvivalDataset.from_arrays(W=[0.0, 1.0], A=[1, 1], T=[1, 2], delta=[1, 0])
    with pytest.raises(DataError):
        fit_propensity(ds)


def test_prediction_grids(sim_ds, sim_fit):
    treated = predict_matrices(sim_fit, sim_ds, 1)
    control = predict_matrices(sim_fit, sim_ds, 0)
    assert treated.hazard.shape == (sim_ds.n, sim_ds.t_max)
    assert np.all(treated.hazard >= 1e-5) and np.all(treated.hazard <= 1 - 1e-5)
    assert np.all(np.diff(treated.survival, axis=1) <= 0)
    np.testing.assert_array_equal(treated.censor_left[:, 0], 1.0)
    np.testing.assert_allclose(treated.censor_left[:, 1:], treated.censor_survival[:, :-1])
    np.testing.assert_allclose(treated.g_a + control.g_a, 1.0)
    assert np.all((treated.g_a >= 0.01) & (treated.g_a <= 0.99))
    np.testing.assert_array_equal(treated.arm + control.arm, 1.0)


def test_prediction_rejects_bad_arm(sim_ds, sim_fit):
    with pytest.raises(ValueError):
        predict_matrices(sim_fit, sim_ds, 2)


def test_with_hazard_keeps_censoring(sim_ds, sim_fit):
    preds = predict_matrices(sim_fit, sim_ds, 1)
    moved = preds.with_hazard(np.full_like(preds.hazard, 0.1))
    np.testing.assert_allclose(moved.survival[:, 1], 0.81)
    assert moved.censor_survival is preds.censor_survival
    assert moved.g_a is preds.g_a


def _constant_hazard_sample(n=2000, failure=0.3, censoring=0.2, t_max=40, seed=8) -> SurvivalDataset:
    # each period ends follow-up with probability failure + censoring, split between the two exits
    rng = np.random.default_rng(seed)
    exit_time = rng.geometric(failure + censoring, size=n)
    failed = rng.random(n) < failure / (failure + censoring)
    T = np.minimum(exit_time, t_max)
    delta = (failed & (exit_time <= t_max)).astype(int)
    return SurvivalDataset.from_arrays(W=rng.uniform(size=n), A=rng.integers(0, 2, size=n), T=T, delta=delta,
                                       t_max=t_max, covariate_names=["x"])


def test_constant_hazards_are_recovered():
    ds = _constant_hazard_sample()
    intercept = BasisSpec(terms=[BasisTerm(kind="intercept")])
    long = to_long_frame(ds)
    rows = len(long)
    for fitter, truth in ((fit_failure_hazard, 0.3), (fit_censor_hazard, 0.2)):
        model = fitter(long, basis=intercept, covariate_names=["x"])
        estimate = float(expit(model.coefficients[0]))
        assert abs(estimate - truth) <= 3 * np.sqrt(truth * (1 - truth) / rows)


def test_censoring_fit_is_the_failure_fit_with_flipped_indicators():
    ds = _constant_hazard_sample(n=300, seed=9)
    flipped = SurvivalDataset.from_arrays(W=ds.W, A=ds.A, T=ds.T, delta=1 - ds.delta, t_max=ds.t_max,
                                          covariate_names=["x"])
    censor = fit_censor_hazard(to_long_frame(ds), covariate_names=["x"], t_scale=40.0)
    failure = fit_failure_hazard(to_long_frame(flipped), covariate_names=["x"], t_scale=40.0)
    np.testing.assert_allclose(failure.coefficients, censor.coefficients, atol=1e-10)


def test_propensity_recovers_the_design_probabilities():
    ds = simulate(DgpConfig(n=2000, seed=12))
    model = fit_propensity(ds, simulation_nuisance_config().propensity_basis)
    low, high = model.predict(np.array([[0.5], [1.0]]))
    n_high = int((ds.W[:, 0] > 0.75).sum())
    assert abs(low - 0.4) <= 3 * np.sqrt(0.4 * 0.6 / (ds.n - n_high))
    assert abs(high - 0.9) <= 3 * np.sqrt(0.9 * 0.1 / n_high)
