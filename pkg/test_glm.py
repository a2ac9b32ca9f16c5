import numpy as np
import pytest
from scipy.special import expit, logit

from errors import SingularDesignError
from glm.logistic import (
    COEF_CAP, _solve_normal_equations, bernoulli_loglik, constrained_step, fit_logistic, project_l1_ball,
)


def _design(seed=3, n=400):
    rng = np.random.default_rng(seed)
    X = np.column_stack([np.ones(n), rng.normal(size=n)])
    y = rng.binomial(1, expit(X @ np.array([-0.5, 1.2]))).astype(float)
    return X, y


def test_intercept_only_fit_matches_logit_of_mean():
    y = np.array([1, 0, 0, 1, 1], dtype=float)
    fit = fit_logistic(np.ones((5, 1)), y)
    assert fit.converged
    assert fit.coefficients[0] == pytest.approx(logit(0.6), abs=1e-6)


def test_offset_shifts_the_intercept():
    y = np.array([1, 0, 0, 1, 1], dtype=float)
    fit = fit_logistic(np.ones((5, 1)), y, offset=np.full(5, 0.3))
    assert fit.offset_used
    assert fit.coefficients[0] == pytest.approx(logit(0.6) - 0.3, abs=1e-6)


def test_weights_act_like_replication():
    X, y = _design()
    weights = np.where(np.arange(y.size) % 2 == 0, 2.0, 1.0)
    weighted = fit_logistic(X, y, weights=weights)
    replicated = fit_logistic(np.vstack([X, X[::2]]), np.concatenate([y, y[::2]]))
    np.testing.assert_allclose(weighted.coefficients, replicated.coefficients, atol=1e-6)


def test_score_vanishes_at_the_fit():
    X, y = _design()
    fit = fit_logistic(X, y)
    score = X.T @ (y - expit(fit.linear_predictor(X)))
    assert np.max(np.abs(score)) < 1e-6
    assert fit.final_negloglik == pytest.approx(-bernoulli_loglik(X @ fit.coefficients, y))


def test_separation_is_capped_not_raised():
    X = np.array([[-1.0], [-2.0], [1.0], [2.0]])
    y = np.array([0.0, 0.0, 1.0, 1.0])
    fit = fit_logistic(X, y)
    assert fit.capped
    assert not fit.converged
    assert np.max(np.abs(fit.coefficients)) <= COEF_CAP


def test_singular_normal_equations_raise():
    with pytest.raises(SingularDesignError):
        _solve_normal_equations(np.full((2, 2), np.nan), np.ones(2))


def test_project_l1_ball():
    np.testing.assert_allclose(project_l1_ball(np.array([3.0, 1.0]), 2.0), [2.0, 0.0])
    inside = np.array([0.5, -0.25])
    np.testing.assert_array_equal(project_l1_ball(inside, 1.0), inside)
    projected = project_l1_ball(np.array([1.0, -2.0, 0.5]), 1.5)
    assert np.sum(np.abs(projected)) == pytest.approx(1.5)


@pytest.mark.parametrize("penalty", ["l2", "l1"])
def test_constrained_step_respects_bound_and_raises_likelihood(penalty):
    X, y = _design()
    offset = np.full(y.size, -2.0)
    bound = 0.01
    step = constrained_step(X, y, offset, bound, penalty=penalty)
    assert step.constraint_active
    assert step.norm <= bound + 1e-12
    assert step.loglik_gain >= 0
    assert bernoulli_loglik(offset + X @ step.epsilon, y) >= bernoulli_loglik(offset, y)


def test_constrained_step_returns_unconstrained_optimum_inside_ball():
    X, y = _design()
    fit = fit_logistic(X, y)
    # offset at the MLE minus a small perturbation, so the optimum is the perturbation
    offset = X @ fit.coefficients - X @ np.array([1e-3, -1e-3])
    step = constrained_step(X, y, offset, bound=1.0)
    assert not step.constraint_active
    np.testing.assert_allclose(step.epsilon, [1e-3, -1e-3], atol=1e-6)


def test_constrained_step_zero_score():
    X = np.ones((4, 1))
    y = np.array([1.0, 0.0, 1.0, 0.0])
    step = constrained_step(X, y, np.zeros(4), bound=0.1)
    assert step.norm == 0.0
    assert step.score_norm_at_zero == 0.0


def test_constrained_step_validates_arguments():
    X, y = _design(n=10)
    with pytest.raises(ValueError):
        constrained_step(X, y, np.zeros(10), bound=0.0)
    with pytest.raises(ValueError):
        constrained_step(X, y, np.zeros(10), bound=0.1, penalty="l3")


@pytest.mark.parametrize("penalty", ["l2", "l1"])
@pytest.mark.parametrize("shift", [0.5, -0.5])
def test_binding_bound_keeps_the_sign_of_the_optimum(penalty, shift):
    y = np.array([1.0, 1.0, 1.0, 0.0])
    # the unconstrained optimum of eps on an intercept column is exactly shift
    offset = np.full(4, logit(0.75) - shift)
    step = constrained_step(np.ones((4, 1)), y, offset, bound=0.01, penalty=penalty)
    assert step.constraint_active
    assert step.epsilon[0] == pytest.approx(0.01 * np.sign(shift), abs=1e-9)


@pytest.mark.parametrize("penalty", ["l2", "l1"])
def test_constrained_step_is_near_the_best_point_of_a_grid(penalty):
    rng = np.random.default_rng(17)
    H = rng.normal(size=(50, 3))
    y = rng.binomial(1, 0.5, size=50).astype(float)
    offset = rng.normal(-1.0, 0.5, size=50)
    bound = 0.01
    step = constrained_step(H, y, offset, bound, penalty=penalty)

    directions = rng.normal(size=(4000, 3))
    if penalty == "l2":
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    else:
        directions /= np.abs(directions).sum(axis=1, keepdims=True)
    grid = np.vstack([r * bound * directions for r in (0.25, 0.5, 0.75, 1.0)])
    best = max(bernoulli_loglik(offset + H @ eps, y) for eps in grid)

    reached = bernoulli_loglik(offset + H @ step.epsilon, y)
    assert reached >= bernoulli_loglik(offset, y)
    assert reached >= best - 1e-4


def test_unbounded_step_is_the_logistic_fit():
    X, y = _design(n=200)
    offset = np.full(y.size, 0.3)
    step = constrained_step(X, y, offset, bound=1e6)
    assert not step.constraint_active
    np.testing.assert_allclose(step.epsilon, fit_logistic(X, y, offset=offset).coefficients, atol=1e-6)
