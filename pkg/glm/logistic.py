"""
Logistic Regression Engine
Newton/IRLS fits with offsets and the norm-constrained steps used by targeting
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import expit

from errors import SingularDesignError

logger = logging.getLogger(__name__)

PROB_CLAMP = 1e-12
COEF_CAP = 20.0
SCORE_TOL = 1e-6
JITTER = 1e-10
PENALTIES = ("l2", "l1")


@dataclass
class LogisticFit:
    """Result of an offset logistic regression"""
    coefficients: np.ndarray
    offset_used: bool
    converged: bool
    iterations: int
    final_negloglik: float
    capped: bool = False

    def linear_predictor(self, X: np.ndarray, offset: Optional[np.ndarray] = None) -> np.ndarray:
        eta = np.asarray(X, dtype=float) @ self.coefficients
        return eta if offset is None else eta + offset


@dataclass
class ConstrainedStep:
    """One norm-bounded fluctuation step"""
    epsilon: np.ndarray
    norm: float
    score_norm_at_zero: float
    penalty: str = "l2"
    constraint_active: bool = False
    loglik_gain: float = 0.0


def bernoulli_loglik(eta: np.ndarray, y: np.ndarray, weights: Optional[np.ndarray] = None) -> float:
    """Bernoulli log-likelihood at logits eta, probabilities clamped to [1e-12, 1-1e-12]"""
    p = np.clip(expit(eta), PROB_CLAMP, 1.0 - PROB_CLAMP)
    ll = y * np.log(p) + (1.0 - y) * np.log1p(-p)
    if weights is not None:
        ll = weights * ll
    return float(np.sum(ll))


def _solve_normal_equations(info: np.ndarray, score: np.ndarray) -> np.ndarray:
    """Solve info @ x = score, retrying once with diagonal jitter"""
    for jitter in (0.0, JITTER):
        try:
            step = np.linalg.solve(info + jitter * np.eye(info.shape[0]), score)
        except np.linalg.LinAlgError:
            continue
        if np.all(np.isfinite(step)):
            if jitter:
                logger.debug("Normal equations solved after jitter")
            return step
    raise SingularDesignError("Normal equations are singular after diagonal jitter",
                              {"columns": int(info.shape[0])})


def _prepare(X, y, offset, weights):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float)
    n = X.shape[0]
    if n == 0:
        raise ValueError("At least one row is required")
    if y.shape != (n,):
        raise ValueError(f"y has shape {y.shape}, expected ({n},)")
    offset = np.zeros(n) if offset is None else np.asarray(offset, dtype=float)
    weights = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    if offset.shape != (n,) or weights.shape != (n,):
        raise ValueError("offset and weights must match the number of rows")
    if np.any(weights < 0):
        raise ValueError("weights must be non-negative")
    return X, y, offset, weights


def fit_logistic(X: np.ndarray, y: np.ndarray, offset: Optional[np.ndarray] = None,
                 weights: Optional[np.ndarray] = None, max_iter: int = 100, tol: float = 1e-10,
                 coef_cap: float = COEF_CAP) -> LogisticFit:
    """
    Weighted logistic regression with a fixed offset, fitted by Newton steps with step halving.

    Stops when the negative log-likelihood changes by less than tol and the weighted
    score is below 1e-6, or after max_iter iterations. Coefficients that run past
    coef_cap (quasi-separation) are capped and the fit is flagged as not converged.

    Raises:
        SingularDesignError: normal equations singular even after jitter
    """
    offset_used = offset is not None
    X, y, offset, w = _prepare(X, y, offset, weights)
    p = X.shape[1]
    beta = np.zeros(p)
    nll = -bernoulli_loglik(offset, y, w)
    if p == 0:
        return LogisticFit(beta, offset_used, True, 0, nll)

    converged = False
    capped = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        mu = expit(offset + X @ beta)
        score = X.T @ (w * (y - mu))
        if np.max(np.abs(score)) <= PROB_CLAMP:
            converged = True
            iterations -= 1
            break
        info = X.T @ (X * (w * mu * (1.0 - mu))[:, None])
        step = _solve_normal_equations(info, score)

        scale = 1.0
        for _ in range(40):
            candidate = beta + scale * step
            candidate_nll = -bernoulli_loglik(offset + X @ candidate, y, w)
            if candidate_nll <= nll + 1e-14 * max(1.0, abs(nll)):
                break
            scale /= 2.0
        else:
            # no descent along the Newton direction: stationary up to rounding
            converged = np.max(np.abs(score)) <= SCORE_TOL
            break

        change = nll - candidate_nll
        beta, nll = candidate, candidate_nll

        if np.max(np.abs(beta)) > coef_cap:
            beta = np.clip(beta, -coef_cap, coef_cap)
            nll = -bernoulli_loglik(offset + X @ beta, y, w)
            capped = True
            break

        if abs(change) < tol:
            score = X.T @ (w * (y - expit(offset + X @ beta)))
            if np.max(np.abs(score)) <= SCORE_TOL:
                converged = True
                break

    if capped:
        logger.debug(f"Coefficients capped at {coef_cap} after {iterations} iterations (quasi-separation)")
    elif not converged:
        logger.debug(f"Logistic fit did not converge in {max_iter} iterations")
    return LogisticFit(beta, offset_used, converged and not capped, iterations, nll, capped)


def project_l1_ball(v: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection onto {x : ||x||_1 <= radius} by soft thresholding"""
    v = np.asarray(v, dtype=float)
    if np.sum(np.abs(v)) <= radius:
        return v.copy()
    u = np.sort(np.abs(v))[::-1]
    css = np.cumsum(u)
    j = np.arange(1, u.size + 1)
    rho = np.nonzero(u * j > css - radius)[0][-1]
    theta = (css[rho] - radius) / (rho + 1.0)
    return np.sign(v) * np.maximum(np.abs(v) - theta, 0.0)


def _norm(eps: np.ndarray, penalty: str) -> float:
    return float(np.sum(np.abs(eps))) if penalty == "l1" else float(np.linalg.norm(eps))


def _l2_step(H, y, offset, w, score, bound):
    """Score direction, Newton length along it, capped at the bound"""
    score_norm = np.linalg.norm(score)
    direction = score / score_norm
    mu = expit(offset)
    curvature = float(np.sum(w * mu * (1.0 - mu) * (H @ direction) ** 2))
    length = bound if curvature <= 0 else min(bound, score_norm / curvature)
    return length * direction


def _l1_step(H, y, offset, w, bound, max_iter=200):
    """Projected gradient ascent on the L1 ball"""
    lipschitz = 0.25 * np.linalg.norm(H * np.sqrt(w)[:, None], 2) ** 2
    eps = np.zeros(H.shape[1])
    if lipschitz <= 0:
        return eps
    for _ in range(max_iter):
        grad = H.T @ (w * (y - expit(offset + H @ eps)))
        updated = project_l1_ball(eps + grad / lipschitz, bound)
        moved = np.max(np.abs(updated - eps))
        eps = updated
        if moved <= 1e-12 * max(bound, 1.0):
            break
    return eps


def constrained_step(H: np.ndarray, y: np.ndarray, offset: np.ndarray, bound: float,
                     penalty: str = "l2", weights: Optional[np.ndarray] = None) -> ConstrainedStep:
    """
    Likelihood-increasing step along logit p = offset + H @ eps with ||eps|| <= bound.

    The unconstrained IRLS optimum is returned when it lies inside the ball.
    Otherwise the L2 variant moves along the score direction and the L1 variant
    runs projected gradient ascent; both then halve the step until the
    log-likelihood is no lower than at eps = 0.
    """
    if bound <= 0:
        raise ValueError(f"bound must be positive, got {bound}")
    if penalty not in PENALTIES:
        raise ValueError(f"penalty must be one of {PENALTIES}, got {penalty!r}")
    H, y, offset, w = _prepare(H, y, offset, weights)
    p = H.shape[1]

    score = H.T @ (w * (y - expit(offset)))
    score_norm = float(np.linalg.norm(score))
    if p == 0 or score_norm == 0.0:
        return ConstrainedStep(np.zeros(p), 0.0, 0.0, penalty)

    ll0 = bernoulli_loglik(offset, y, w)
    try:
        fit = fit_logistic(H, y, offset, w)
        if np.all(np.isfinite(fit.coefficients)) and _norm(fit.coefficients, penalty) <= bound:
            eps = fit.coefficients
            gain = bernoulli_loglik(offset + H @ eps, y, w) - ll0
            if gain >= 0:
                return ConstrainedStep(eps, _norm(eps, penalty), score_norm, penalty, False, gain)
    except SingularDesignError:
        logger.debug("Unconstrained fit singular; using the constrained path")

    if penalty == "l2":
        eps = _l2_step(H, y, offset, w, score, bound)
    else:
        eps = _l1_step(H, y, offset, w, bound)

    ll = bernoulli_loglik(offset + H @ eps, y, w)
    halvings = 0
    while ll < ll0 and halvings < 60:
        eps = eps / 2.0
        ll = bernoulli_loglik(offset + H @ eps, y, w)
        halvings += 1
    if ll < ll0:
        eps = np.zeros(p)
        ll = ll0
    return ConstrainedStep(eps, _norm(eps, penalty), score_norm, penalty, True, ll - ll0)
