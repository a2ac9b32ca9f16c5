"""
Data models for right-censored observational survival data
"""
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from errors import DataError, SchemaError


@dataclass(frozen=True)
class Observation:
    """One subject: covariates, treatment, discrete follow-up time and event indicator"""
    id: int
    w: Tuple[float, ...]
    a: int
    t_tilde: int
    delta: int

    def __post_init__(self):
        if self.a not in (0, 1):
            raise SchemaError(f"Treatment must be 0 or 1, got {self.a}", {"id": self.id})
        if self.delta not in (0, 1):
            raise SchemaError(f"Event indicator must be 0 or 1, got {self.delta}", {"id": self.id})
        if self.t_tilde < 1:
            raise SchemaError(f"Follow-up time must be a positive integer, got {self.t_tilde}", {"id": self.id})


@dataclass(frozen=True)
class LongRow:
    """One person-time row of the pooled hazard classification data"""
    id: int
    k: int
    dN: int
    dAc: int
    at_risk: int
    a: int
    w: Tuple[float, ...]


@dataclass
class SurvivalDataset:
    """
    n observations on the integer grid 1..t_max.

    t_max defaults to the largest follow-up time. An explicit t_max may extend
    the grid upward (a fixed analysis grid); shortening it is administrative
    truncation and goes through preprocess(). time_scale is the width of one
    grid step in the input time units (1 until preprocess rescales).
    """
    observations: List[Observation]
    t_max: Optional[int] = None
    covariate_names: List[str] = field(default_factory=list)
    dropped_rows: int = 0
    time_scale: int = 1

    def __post_init__(self):
        if not self.observations:
            raise DataError("Dataset is empty")
        if self.time_scale < 1:
            raise DataError(f"time_scale must be a positive integer, got {self.time_scale}")

        dims = {len(o.w) for o in self.observations}
        if len(dims) != 1:
            raise SchemaError(f"Observations disagree on covariate dimension: {sorted(dims)}")
        p = dims.pop()
        if not self.covariate_names:
            self.covariate_names = [f"w{j + 1}" for j in range(p)]
        if len(self.covariate_names) != p:
            raise SchemaError(f"{len(self.covariate_names)} covariate names for {p} covariates")

        ids = [o.id for o in self.observations]
        if len(set(ids)) != len(ids):
            raise SchemaError("Observation ids must be unique")

        observed_max = max(o.t_tilde for o in self.observations)
        if self.t_max is None:
            self.t_max = observed_max
        elif self.t_max < observed_max:
            raise DataError(
                f"t_max={self.t_max} is below the largest follow-up time {observed_max}; "
                "use preprocess(truncate_at=...) to truncate"
            )

        self._ids = np.array(ids, dtype=np.int64)
        self._W = np.array([o.w for o in self.observations], dtype=float).reshape(len(ids), p)
        self._A = np.array([o.a for o in self.observations], dtype=np.int64)
        self._T = np.array([o.t_tilde for o in self.observations], dtype=np.int64)
        self._delta = np.array([o.delta for o in self.observations], dtype=np.int64)
        for arr in (self._ids, self._W, self._A, self._T, self._delta):
            arr.setflags(write=False)

    @classmethod
    def from_arrays(cls, W: np.ndarray, A: np.ndarray, T: np.ndarray, delta: np.ndarray,
                    ids: Optional[np.ndarray] = None, t_max: Optional[int] = None,
                    covariate_names: Optional[List[str]] = None, dropped_rows: int = 0,
                    time_scale: int = 1) -> "SurvivalDataset":
        """Build a dataset from column arrays"""
        W = np.asarray(W, dtype=float)
        if W.ndim == 1:
            W = W[:, None]
        n = W.shape[0]
        ids = np.arange(1, n + 1) if ids is None else np.asarray(ids)
        observations = [
            Observation(id=int(ids[i]), w=tuple(float(x) for x in W[i]), a=int(A[i]),
                        t_tilde=int(T[i]), delta=int(delta[i]))
            for i in range(n)
        ]
        return cls(observations, t_max=t_max, covariate_names=list(covariate_names or []),
                   dropped_rows=dropped_rows, time_scale=time_scale)

    @property
    def n(self) -> int:
        return len(self.observations)

    @property
    def ids(self) -> np.ndarray:
        return self._ids

    @property
    def W(self) -> np.ndarray:
        return self._W

    @property
    def A(self) -> np.ndarray:
        return self._A

    @property
    def T(self) -> np.ndarray:
        return self._T

    @property
    def delta(self) -> np.ndarray:
        return self._delta

    @property
    def grid(self) -> np.ndarray:
        """Target times 1..t_max"""
        return np.arange(1, self.t_max + 1)

    def row_index(self) -> Tuple[np.ndarray, np.ndarray]:
        """Subject index and time k of every person-time row, ordered by (subject, k)"""
        subject = np.repeat(np.arange(self.n), self._T)
        starts = np.cumsum(self._T) - self._T
        k = np.arange(subject.size) - np.repeat(starts, self._T) + 1
        return subject, k

    def row_starts(self) -> np.ndarray:
        """Offset of each subject's first person-time row"""
        return np.cumsum(self._T) - self._T

    def subset(self, indices: np.ndarray) -> "SurvivalDataset":
        """Dataset of the selected subjects on the same grid"""
        return SurvivalDataset([self.observations[int(i)] for i in indices], t_max=self.t_max,
                               covariate_names=list(self.covariate_names), time_scale=self.time_scale)
