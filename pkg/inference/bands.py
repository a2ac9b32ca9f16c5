"""
Pointwise Wald intervals and simultaneous confidence bands from the EIF
"""
import logging
import re
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy import linalg
from scipy.stats import norm

from eif.influence import EifMatrix
from errors import CholeskyError, DataError

logger = logging.getLogger(__name__)

BLOCK_SIZE = 1000
DEGENERATE_VARIANCE = 1e-14
JITTER_LADDER = (1e-10, 1e-9, 1e-8, 1e-7, 1e-6)
BAND_COLUMNS = ["t", "psi", "se", "lo_pw", "hi_pw", "lo_simul", "hi_simul"]


@dataclass
class BandResult:
    """Pointwise and (optionally) simultaneous intervals around a curve; bounds are unclipped"""
    alpha: float
    times: np.ndarray
    psi: np.ndarray
    se: np.ndarray
    q_pointwise: float
    lo_pw: np.ndarray
    hi_pw: np.ndarray
    q_simultaneous: Optional[float] = None
    lo_simul: Optional[np.ndarray] = None
    hi_simul: Optional[np.ndarray] = None
    covariance: Optional[np.ndarray] = None
    mc_draws: int = 0

    def to_frame(self, clip: bool = True, bounds: Tuple[float, float] = (0.0, 1.0)) -> pd.DataFrame:
        """Band table; clip restricts the interval ends to bounds (the parameter space)"""
        missing = np.full(self.psi.size, np.nan)
        frame = pd.DataFrame({
            "t": self.times,
            "psi": self.psi,
            "se": self.se,
            "lo_pw": self.lo_pw,
            "hi_pw": self.hi_pw,
            "lo_simul": missing if self.lo_simul is None else self.lo_simul,
            "hi_simul": missing if self.hi_simul is None else self.hi_simul,
        }, columns=BAND_COLUMNS)
        if clip:
            ends = ["lo_pw", "hi_pw", "lo_simul", "hi_simul"]
            frame[ends] = frame[ends].clip(*bounds)
        return frame

    def covers(self, truth: np.ndarray, simultaneous: bool = False) -> np.ndarray:
        """Per-t coverage of truth by the unclipped intervals"""
        lo, hi = (self.lo_simul, self.hi_simul) if simultaneous else (self.lo_pw, self.hi_pw)
        if lo is None:
            raise ValueError("No simultaneous band was computed")
        truth = np.asarray(truth, dtype=float)
        return (lo <= truth) & (truth <= hi)

    def covers_curve(self, truth: np.ndarray) -> bool:
        """Whole-curve coverage by the simultaneous band"""
        return bool(np.all(self.covers(truth, simultaneous=True)))


def _check(eif: EifMatrix, psi: Optional[np.ndarray]) -> np.ndarray:
    if eif.n < 2:
        raise DataError(f"Inference needs at least two subjects, got {eif.n}")
    psi = eif.psi if psi is None else np.asarray(psi, dtype=float)
    if psi.shape != (eif.values.shape[1],):
        raise ValueError("psi does not match the EIF columns")
    return psi


def pointwise_ci(eif: EifMatrix, psi: Optional[np.ndarray] = None, alpha: float = 0.05) -> BandResult:
    """psi(t) +/- q_{1-alpha/2} sigma_t / sqrt(n) with sigma_t^2 = mean_i D[i, t]^2"""
    psi = _check(eif, psi)
    se = eif.sigma() / np.sqrt(eif.n)
    q = float(norm.ppf(1.0 - alpha / 2.0))
    return BandResult(alpha=alpha, times=np.arange(1, psi.size + 1), psi=psi, se=se, q_pointwise=q,
                      lo_pw=psi - q * se, hi_pw=psi + q * se)


def correlation_from_covariance(cov: np.ndarray) -> np.ndarray:
    """Unit-diagonal correlation; degenerate coordinates get an indicator row"""
    sd = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    live = np.diag(cov) >= DEGENERATE_VARIANCE
    rho = np.eye(cov.shape[0])
    if live.any():
        idx = np.flatnonzero(live)
        sub = cov[np.ix_(idx, idx)] / np.outer(sd[idx], sd[idx])
        rho[np.ix_(idx, idx)] = np.clip(sub, -1.0, 1.0)
    np.fill_diagonal(rho, 1.0)
    return rho


def _cholesky(rho: np.ndarray) -> np.ndarray:
    identity = np.eye(rho.shape[0])
    last_error = ""
    for jitter in JITTER_LADDER:
        try:
            return linalg.cholesky(rho + jitter * identity, lower=True)
        except linalg.LinAlgError as e:
            last_error = str(e)
            logger.debug(f"Cholesky failed at jitter {jitter:g}: {e}")
    match = re.search(r"(\d+)", last_error)
    raise CholeskyError(
        f"Correlation matrix not positive definite after jitter {JITTER_LADDER[-1]:g}",
        {"minor": int(match.group(1)) if match else None, "detail": last_error},
    )


def _max_abs_block(chol: np.ndarray, seed_seq: np.random.SeedSequence, size: int) -> np.ndarray:
    rng = np.random.default_rng(seed_seq)
    Z = rng.standard_normal((size, chol.shape[0])) @ chol.T
    return np.max(np.abs(Z), axis=1)


def max_abs_quantile(rho: np.ndarray, alpha: float, mc_draws: int, seed: int, n_jobs: int = 1) -> float:
    """
    Empirical (1 - alpha) quantile of max_t |Z_t| with Z ~ N(0, rho).

    Draws come in fixed blocks of 1000, each from its own SeedSequence child, so
    the result does not depend on n_jobs.
    """
    chol = _cholesky(rho)
    sizes = [BLOCK_SIZE] * (mc_draws // BLOCK_SIZE)
    if mc_draws % BLOCK_SIZE:
        sizes.append(mc_draws % BLOCK_SIZE)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    blocks = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_max_abs_block)(chol, child, size) for child, size in zip(children, sizes)
    )
    return float(np.quantile(np.concatenate(blocks), 1.0 - alpha))


def simultaneous_band(eif: EifMatrix, psi: Optional[np.ndarray] = None, alpha: float = 0.05,
                      mc_draws: int = 10000, seed: int = 0, n_jobs: int = 1) -> BandResult:
    """
    Simultaneous band psi(t) +/- q_{1-alpha} Sigma(t, t)^{1/2} / sqrt(n), with
    Sigma = D'D / n and q the Monte-Carlo quantile of the max-|Z| statistic.
    The pointwise intervals are included.
    """
    if mc_draws < 1:
        raise ValueError("mc_draws must be positive")
    result = pointwise_ci(eif, psi, alpha)
    D = eif.values
    cov = D.T @ D / eif.n
    q = max_abs_quantile(correlation_from_covariance(cov), alpha, mc_draws, seed, n_jobs)
    if q < result.q_pointwise - 3.0 / np.sqrt(mc_draws):
        logger.warning(f"Simultaneous quantile {q:.4f} below the pointwise {result.q_pointwise:.4f}")
    half = q * np.sqrt(np.diag(cov)) / np.sqrt(eif.n)
    result.q_simultaneous = q
    result.lo_simul = result.psi - half
    result.hi_simul = result.psi + half
    result.covariance = cov
    result.mc_draws = mc_draws
    return result
