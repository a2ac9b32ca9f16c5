"""
GLM package
Logistic regression with offsets and constrained targeting steps
"""

from glm.logistic import (
    LogisticFit, ConstrainedStep, fit_logistic, constrained_step,
    bernoulli_loglik, project_l1_ball, PROB_CLAMP, COEF_CAP,
)

__all__ = [
    "LogisticFit", "ConstrainedStep", "fit_logistic", "constrained_step",
    "bernoulli_loglik", "project_l1_ball", "PROB_CLAMP", "COEF_CAP",
]
