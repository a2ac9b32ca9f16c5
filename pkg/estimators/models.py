"""
Data models for survival-curve estimates
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from eif.influence import EifMatrix

MONOTONE_TOL = 1e-12


class Method(Enum):
    """Estimator tags"""
    KM = "km"
    PLUGIN = "plugin"
    IPCW = "ipcw"
    EE = "ee"
    TMLE = "tmle"
    MOSS_L2 = "moss-l2"
    MOSS_L1 = "moss-l1"

    @property
    def supports_inference(self) -> bool:
        """Methods whose EIF-based standard errors are reported"""
        return self in (Method.EE, Method.TMLE, Method.MOSS_L2, Method.MOSS_L1)

    @property
    def penalty(self) -> Optional[str]:
        return {Method.MOSS_L2: "l2", Method.MOSS_L1: "l1"}.get(self)

    @classmethod
    def parse(cls, value: str) -> "Method":
        try:
            return cls(value.strip().lower())
        except ValueError:
            valid = ", ".join(m.value for m in cls)
            raise ValueError(f"Unknown method {value!r}; expected one of: {valid}")


@dataclass
class TargetStep:
    """One fluctuation of the failure hazard"""
    iteration: int
    epsilon: np.ndarray
    norm: float
    max_abs_mean_eif: float
    loglik: float
    target_time: Optional[int] = None


@dataclass
class TargetingTrace:
    """Per-iteration record of a targeting loop"""
    steps: List[TargetStep] = field(default_factory=list)
    step_bound_halved: bool = False

    def __len__(self) -> int:
        return len(self.steps)

    def append(self, step: TargetStep) -> None:
        self.steps.append(step)

    def logliks(self) -> np.ndarray:
        return np.array([s.loglik for s in self.steps])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([
            {"iteration": s.iteration, "target_time": s.target_time, "norm": s.norm,
             "max_abs_mean_eif": s.max_abs_mean_eif, "loglik": s.loglik}
            for s in self.steps
        ], columns=["iteration", "target_time", "norm", "max_abs_mean_eif", "loglik"])


@dataclass
class CurveEstimate:
    """Counterfactual survival curve psi(t) = E[S(t | a, W)] on a time grid"""
    method: Method
    a: Optional[int]
    psi: np.ndarray
    times: Optional[np.ndarray] = None
    eif: Optional[EifMatrix] = None
    trace: Optional[TargetingTrace] = None
    converged: bool = True
    exit_reason: str = ""
    iterations: int = 0
    contrast: Optional[str] = None

    def __post_init__(self):
        self.psi = np.asarray(self.psi, dtype=float)
        if self.times is None:
            self.times = np.arange(1, self.psi.size + 1)
        if self.a is None and self.contrast is None:
            raise ValueError("CurveEstimate needs a treatment level or a contrast label")

    @property
    def arm_label(self) -> str:
        return self.contrast if self.contrast is not None else str(self.a)

    def is_monotone(self, tol: float = MONOTONE_TOL) -> bool:
        """Non-increasing in t up to tol"""
        return bool(np.all(np.diff(self.psi) <= tol))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "method": self.method.value,
            "arm": self.arm_label,
            "t": self.times,
            "psi": self.psi,
        })

    def to_dict(self) -> Dict[str, Any]:
        return {
            "method": self.method.value,
            "arm": self.arm_label,
            "t": [int(t) for t in self.times],
            "psi": [float(x) for x in self.psi],
            "monotone": self.is_monotone(),
            "converged": self.converged,
            "exit_reason": self.exit_reason,
            "iterations": self.iterations,
        }
