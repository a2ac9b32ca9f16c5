"""
Simulated observational survival data and its true counterfactual curves

  W ~ Uniform(0, 1.5)
  A ~ Bernoulli(0.4 + 0.5 I(W > 0.75))
  T ~ LogNormal(mean-log 2 - W + A, sd-log 0.01)
  C ~ Weibull(shape 1 + 0.5 W, scale 75)
"""
import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from data.models import SurvivalDataset
from errors import ConfigError, NumericalError
from nuisance.basis import BasisSpec, BasisTerm, NuisanceConfig

logger = logging.getLogger(__name__)

ORACLE_DRAWS = 1_000_000
ORACLE_SEED = 20_000_101
ORACLE_AGREEMENT = 0.002


@dataclass
class DgpConfig:
    """Parameters of the simulation design"""
    n: int = 1000
    seed: int = 0
    w_upper: float = 1.5
    treat_base: float = 0.4
    treat_bump: float = 0.5
    treat_threshold: float = 0.75
    mu_intercept: float = 2.0
    mu_w: float = -1.0
    mu_a: float = 1.0
    sigma: float = 0.01
    weibull_shape: float = 1.0
    weibull_shape_w: float = 0.5
    weibull_scale: float = 75.0
    t_max: int = 21

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError(f"n must be positive, got {self.n}")
        if self.w_upper <= 0 or self.sigma <= 0 or self.weibull_scale <= 0:
            raise ConfigError("w_upper, sigma and weibull_scale must be positive")
        if self.weibull_shape <= 0 or self.weibull_shape + self.weibull_shape_w * self.w_upper <= 0:
            raise ConfigError("Weibull shape must stay positive over the covariate range")
        if not 0 <= self.treat_base <= 1 or not 0 <= self.treat_base + self.treat_bump <= 1:
            raise ConfigError("Treatment probabilities must lie in [0, 1]")
        if self.t_max < 1:
            raise ConfigError(f"t_max must be positive, got {self.t_max}")

    def mean_log(self, W: np.ndarray, A: np.ndarray) -> np.ndarray:
        return self.mu_intercept + self.mu_w * W + self.mu_a * A

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def discretize_follow_up(T: np.ndarray, C: np.ndarray, t_max: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Map continuous failure and censoring times to (T_tilde, delta) on 1..t_max.

    Both times are rounded up first, so a failure and a censoring in the same
    interval tie and the tie resolves to failure: delta = I(ceil T <= ceil C).
    Follow-up past t_max is censored at t_max.
    """
    T_d = np.maximum(np.ceil(np.asarray(T, dtype=float)), 1).astype(int)
    C_d = np.maximum(np.ceil(np.asarray(C, dtype=float)), 1).astype(int)
    t_tilde = np.minimum(T_d, C_d)
    delta = (T_d <= C_d).astype(int)
    over = t_tilde > t_max
    t_tilde[over] = t_max
    delta[over] = 0
    return t_tilde, delta


def simulate(cfg: DgpConfig) -> SurvivalDataset:
    """
    Draw n subjects and discretize their follow-up with discretize_follow_up.
    Deterministic for a seed.
    """
    rng = np.random.default_rng(cfg.seed)
    W = rng.uniform(0.0, cfg.w_upper, cfg.n)
    A = rng.binomial(1, cfg.treat_base + cfg.treat_bump * (W > cfg.treat_threshold))
    T = np.exp(rng.normal(cfg.mean_log(W, A), cfg.sigma))
    C = cfg.weibull_scale * rng.weibull(cfg.weibull_shape + cfg.weibull_shape_w * W)

    t_tilde, delta = discretize_follow_up(T, C, cfg.t_max)
    return SurvivalDataset.from_arrays(W=W, A=A, T=t_tilde, delta=delta, t_max=cfg.t_max,
                                       covariate_names=["W"])


def oracle_closed_form(a: int, t: Sequence[float], cfg: Optional[DgpConfig] = None) -> np.ndarray:
    """
    Small-sigma limit of P(T_a > t): T_a = exp(mu_intercept + mu_w W + mu_a a), so
    P(T_a > t) = P(W < (ln t - mu_intercept - mu_a a) / mu_w) for mu_w < 0.
    """
    cfg = cfg or DgpConfig()
    if cfg.mu_w >= 0:
        raise ConfigError("The closed-form oracle needs mu_w < 0")
    cutoff = (np.log(np.asarray(t, dtype=float)) - cfg.mu_intercept - cfg.mu_a * a) / cfg.mu_w
    return np.clip(cutoff / cfg.w_upper, 0.0, 1.0)


def oracle_curve(a: int, t_grid: Sequence[float], cfg: Optional[DgpConfig] = None,
                 draws: int = ORACLE_DRAWS, seed: int = ORACLE_SEED) -> np.ndarray:
    """Monte-Carlo P(T_a > t) from the failure-time marginal (no censoring, treatment set to a)"""
    cfg = cfg or DgpConfig()
    rng = np.random.default_rng(seed)
    W = rng.uniform(0.0, cfg.w_upper, draws)
    T = np.sort(np.exp(rng.normal(cfg.mean_log(W, np.full(draws, a)), cfg.sigma)))
    t_grid = np.asarray(t_grid, dtype=float)
    survival = 1.0 - np.searchsorted(T, t_grid, side="right") / draws
    if cfg.mu_w < 0:
        gap = float(np.max(np.abs(survival - oracle_closed_form(a, t_grid, cfg))))
        # Monte-Carlo error at 4 SE, and the largest smoothing of the closed-form kinks by sigma
        smoothing = cfg.sigma / (abs(cfg.mu_w) * cfg.w_upper * np.sqrt(2 * np.pi))
        allowed = max(ORACLE_AGREEMENT, 2.0 / np.sqrt(draws), smoothing)
        logger.debug(f"Oracle arm {a}: Monte-Carlo vs closed form max gap {gap:.4f} (allowed {allowed:.4f})")
        if gap > allowed:
            raise NumericalError(f"Monte-Carlo oracle for arm {a} is {gap:.4f} from the closed form",
                                 {"arm": a, "gap": gap, "allowed": allowed, "draws": draws})
    return survival


def simulation_nuisance_config() -> NuisanceConfig:
    """
    Correctly specified working models for the design above.

    The failure hazard is a near step function of log k - (2 - W + A); the
    scales keep its logistic coefficients inside the coefficient cap.
    """
    return NuisanceConfig(
        failure_basis=BasisSpec(terms=[
            BasisTerm(kind="intercept", scale=40.0),
            BasisTerm(kind="log_time", scale=20.0),
            BasisTerm(kind="treatment", scale=20.0),
            BasisTerm(kind="covariate", covariate="W", scale=20.0),
        ]),
        censor_basis=BasisSpec(terms=[
            BasisTerm(kind="intercept"),
            BasisTerm(kind="log_time"),
            BasisTerm(kind="covariate", covariate="W"),
        ]),
        propensity_basis=BasisSpec(terms=[
            BasisTerm(kind="intercept"),
            BasisTerm(kind="indicator", covariate="W", threshold=0.75),
        ]),
    )
