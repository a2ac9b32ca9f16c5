"""
Data models for simulation-study results
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

METRIC_COLUMNS = ["method", "arm", "t", "oracle", "bias", "var", "mse", "re", "coverage_pw"]
SUMMARY_COLUMNS = ["method", "arm", "reps_ok", "failures", "monotone_fraction", "coverage_simul",
                   "mean_mse_interior"]


@dataclass
class RepFailure:
    """An estimator run that raised inside one replicate"""
    rep: int
    method: str
    arm: int
    error: str
    message: str


@dataclass
class StudyReport:
    """
    Aggregated Monte-Carlo results.

    metrics holds one row per (method, arm, t); summary one row per (method, arm).
    re is relative to the iterative TMLE of the same arm (NaN when it was not run).
    """
    n: int
    reps: int
    seed: int
    methods: List[str]
    arms: List[int]
    metrics: pd.DataFrame
    summary: pd.DataFrame
    followup_counts: np.ndarray
    failures: List[RepFailure] = field(default_factory=list)
    runtime_seconds: float = 0.0
    dgp: Optional[Dict[str, Any]] = None

    def monotone_fraction(self, method: str, arm: int) -> float:
        row = self.summary[(self.summary["method"] == method) & (self.summary["arm"] == arm)]
        return float(row["monotone_fraction"].iloc[0]) if not row.empty else float("nan")

    def metric(self, method: str, arm: int, column: str) -> np.ndarray:
        rows = self.metrics[(self.metrics["method"] == method) & (self.metrics["arm"] == arm)]
        return rows.sort_values("t")[column].to_numpy()

    def followup_frame(self) -> pd.DataFrame:
        """Number of replicates whose largest follow-up time reaches t"""
        return pd.DataFrame({"t": np.arange(1, self.followup_counts.size + 1),
                             "reps_followed": self.followup_counts})

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "reps": self.reps,
            "seed": self.seed,
            "methods": list(self.methods),
            "arms": list(self.arms),
            "runtime_seconds": round(self.runtime_seconds, 3),
            "failures": [vars(f) for f in self.failures],
            "summary": self.summary.replace({np.nan: None}).to_dict(orient="records"),
            "metrics": self.metrics.replace({np.nan: None}).to_dict(orient="records"),
            "followup_counts": [int(c) for c in self.followup_counts],
            "dgp": self.dgp,
        }
