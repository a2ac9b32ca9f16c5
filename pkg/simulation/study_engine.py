"""
Study Engine
Monte-Carlo comparison of the estimators on simulated data
"""
import logging
import time
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from analysis.metrics import curve_metrics, interior_mask, monotone_fraction, relative_efficiency
from analysis.models import METRIC_COLUMNS, SUMMARY_COLUMNS, RepFailure, StudyReport
from errors import ConfigError, SurvivalToolError
from estimators.models import Method
from estimators.runner import run_method
from inference.bands import simultaneous_band
from nuisance.basis import NuisanceConfig
from nuisance.fitting import fit_nuisance
from .dgp import DgpConfig, oracle_curve, simulate, simulation_nuisance_config

logger = logging.getLogger(__name__)

Key = Tuple[str, int]


@dataclass
class RepResult:
    """Curves and coverage flags of one replicate"""
    rep: int
    curves: Dict[Key, np.ndarray] = field(default_factory=dict)
    monotone: Dict[Key, bool] = field(default_factory=dict)
    covered_pw: Dict[Key, np.ndarray] = field(default_factory=dict)
    covered_curve: Dict[Key, bool] = field(default_factory=dict)
    failures: List[RepFailure] = field(default_factory=list)
    max_followup: int = 0


class StudyEngine:
    """Runs replicates of simulate -> fit nuisance -> estimate, then aggregates against the oracle"""

    def __init__(self, dgp: DgpConfig, methods: Sequence[str], arms: Sequence[int] = (0, 1),
                 nuisance: Optional[NuisanceConfig] = None, alpha: float = 0.05, coverage: bool = True,
                 mc_draws: int = 1000, threads: int = 1, targeting: Optional[Dict[str, Any]] = None,
                 oracle_draws: int = 1_000_000):
        self.dgp = dgp
        self.methods = [Method.parse(m) if isinstance(m, str) else m for m in methods]
        if not self.methods:
            raise ConfigError("At least one method is required")
        self.arms = [int(a) for a in arms]
        if not set(self.arms) <= {0, 1} or not self.arms:
            raise ConfigError(f"Arms must be drawn from {{0, 1}}, got {list(arms)}")
        self.nuisance = nuisance or simulation_nuisance_config()
        self.alpha = alpha
        self.coverage = coverage
        self.mc_draws = mc_draws
        self.threads = threads
        self.targeting = dict(targeting or {})
        grid = np.arange(1, dgp.t_max + 1)
        self.oracle = {a: oracle_curve(a, grid, dgp, draws=oracle_draws) for a in self.arms}
        logger.info(f"Study engine initialized: n={dgp.n}, methods={[m.value for m in self.methods]}, "
                    f"arms={self.arms}, threads={threads}")

    def run_rep(self, rep: int) -> RepResult:
        """One replicate, seeded by base seed + rep"""
        seed = self.dgp.seed + rep
        ds = simulate(replace(self.dgp, seed=seed))
        result = RepResult(rep=rep, max_followup=int(ds.T.max()))
        try:
            fit = fit_nuisance(ds, self.nuisance)
        except SurvivalToolError as e:
            for method in self.methods:
                for a in self.arms:
                    result.failures.append(RepFailure(rep, method.value, a, type(e).__name__, str(e)))
            return result

        for method in self.methods:
            for a in self.arms:
                key = (method.value, a)
                try:
                    estimate = run_method(method, fit, ds, a, **self.targeting)
                    result.curves[key] = estimate.psi
                    result.monotone[key] = estimate.is_monotone()
                    if self.coverage and method.supports_inference and estimate.eif is not None:
                        band = simultaneous_band(estimate.eif, estimate.psi, self.alpha,
                                                 mc_draws=self.mc_draws, seed=seed)
                        result.covered_pw[key] = band.covers(self.oracle[a])
                        result.covered_curve[key] = band.covers_curve(self.oracle[a])
                except SurvivalToolError as e:
                    result.failures.append(RepFailure(rep, method.value, a, type(e).__name__, str(e)))
        return result

    def run(self, reps: int) -> StudyReport:
        if reps < 2:
            raise ConfigError(f"A study needs at least 2 replicates, got {reps}")
        start = time.time()
        logger.info(f"Running {reps} replicates at n={self.dgp.n}")
        results = Parallel(n_jobs=self.threads)(delayed(_run_rep)(self, rep) for rep in range(reps))
        report = self._aggregate(results, reps, time.time() - start)
        if report.failures:
            logger.warning(f"{len(report.failures)} estimator runs failed and were excluded")
        logger.info(f"Study finished in {report.runtime_seconds:.1f}s")
        return report

    def _aggregate(self, results: List[RepResult], reps: int, runtime: float) -> StudyReport:
        grid = np.arange(1, self.dgp.t_max + 1)
        failures = [f for r in results for f in r.failures]
        metric_rows, summary_rows = [], []
        mse_tmle: Dict[int, np.ndarray] = {}

        stats = {}
        for method in self.methods:
            for a in self.arms:
                key = (method.value, a)
                curves = [r.curves[key] for r in results if key in r.curves]
                if curves:
                    stats[key] = curve_metrics(np.vstack(curves), self.oracle[a])
                    if method is Method.TMLE:
                        mse_tmle[a] = stats[key]["mse"]

        for method in self.methods:
            for a in self.arms:
                key = (method.value, a)
                truth = self.oracle[a]
                metric = stats.get(key)
                nan = np.full(grid.size, np.nan)
                re = relative_efficiency(mse_tmle[a], metric["mse"]) if metric and a in mse_tmle else nan
                covered = [r.covered_pw[key] for r in results if key in r.covered_pw]
                coverage_pw = np.mean(covered, axis=0) if covered else nan
                metric_rows.append(pd.DataFrame({
                    "method": method.value, "arm": a, "t": grid, "oracle": truth,
                    "bias": metric["bias"] if metric else nan,
                    "var": metric["var"] if metric else nan,
                    "mse": metric["mse"] if metric else nan,
                    "re": re, "coverage_pw": coverage_pw,
                }, columns=METRIC_COLUMNS))

                curve_cover = [r.covered_curve[key] for r in results if key in r.covered_curve]
                interior = interior_mask(truth)
                summary_rows.append({
                    "method": method.value,
                    "arm": a,
                    "reps_ok": sum(key in r.curves for r in results),
                    "failures": sum(1 for f in failures if (f.method, f.arm) == key),
                    "monotone_fraction": monotone_fraction(r.monotone[key] for r in results if key in r.monotone),
                    "coverage_simul": float(np.mean(curve_cover)) if curve_cover else np.nan,
                    "mean_mse_interior": float(metric["mse"][interior].mean()) if metric and interior.any() else np.nan,
                })

        max_followup = np.array([r.max_followup for r in results])
        return StudyReport(
            n=self.dgp.n, reps=reps, seed=self.dgp.seed,
            methods=[m.value for m in self.methods], arms=self.arms,
            metrics=pd.concat(metric_rows, ignore_index=True),
            summary=pd.DataFrame(summary_rows, columns=SUMMARY_COLUMNS),
            followup_counts=np.array([int(np.sum(max_followup >= t)) for t in grid]),
            failures=failures, runtime_seconds=runtime, dgp=self.dgp.to_dict(),
        )


def _run_rep(engine: StudyEngine, rep: int) -> RepResult:
    return engine.run_rep(rep)


def run_study(cfg: DgpConfig, methods: Sequence[str], reps: int, **kwargs) -> StudyReport:
    """Build a StudyEngine for cfg and run reps replicates; kwargs go to StudyEngine"""
    return StudyEngine(cfg, methods, **kwargs).run(reps)
