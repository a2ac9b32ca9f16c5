"""
Basis expansions for the pooled logistic working models
"""
import logging
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from errors import ConfigError

logger = logging.getLogger(__name__)

TermKind = Literal[
    "intercept", "time", "log_time", "treatment", "covariate",
    "indicator", "treatment_time", "treatment_covariate",
]
# Terms that need the person-time index k or the treatment column
HAZARD_ONLY_KINDS = {"time", "log_time", "treatment", "treatment_time", "treatment_covariate"}


class BasisTerm(BaseModel):
    """One block of design-matrix columns"""
    model_config = ConfigDict(extra="forbid")

    kind: TermKind
    degree: int = Field(default=1, ge=1, le=3)
    covariate: Optional[str] = None  # None selects every covariate
    threshold: Optional[float] = None
    t_scale: Optional[float] = Field(default=None, gt=0)
    scale: float = 1.0

    @model_validator(mode="after")
    def _check_indicator(self):
        if self.kind == "indicator" and (self.covariate is None or self.threshold is None):
            raise ValueError("indicator terms need both covariate and threshold")
        return self

    def label(self) -> str:
        parts = [self.kind]
        if self.covariate:
            parts.append(self.covariate)
        if self.kind == "indicator":
            parts.append(f">{self.threshold:g}")
        if self.kind == "time" and self.degree > 1:
            parts.append(f"deg{self.degree}")
        return ":".join(parts)


class BasisSpec(BaseModel):
    """Ordered list of basis terms"""
    model_config = ConfigDict(extra="forbid")

    terms: List[BasisTerm]

    def column_names(self, covariate_names: Sequence[str]) -> List[str]:
        names = []
        for term in self.terms:
            if term.kind == "time":
                names += [f"time^{d}" for d in range(1, term.degree + 1)]
            elif term.kind in ("covariate", "treatment_covariate"):
                prefix = "a*" if term.kind == "treatment_covariate" else ""
                names += [prefix + c for c in _select(term, covariate_names)[1]]
            else:
                names.append(term.label())
        return names

    def validate_for(self, covariate_names: Sequence[str], hazard: bool = True) -> None:
        """Raise ConfigError if a term cannot be built for this model and data"""
        for term in self.terms:
            if not hazard and term.kind in HAZARD_ONLY_KINDS:
                raise ConfigError(f"Basis term {term.kind!r} is not available for the propensity model")
            _select(term, covariate_names)

    def design(self, W: np.ndarray, covariate_names: Sequence[str], k: Optional[np.ndarray] = None,
               a: Optional[np.ndarray] = None, t_scale: float = 1.0) -> np.ndarray:
        """
        Design matrix with one row per entry of W.

        Args:
            W: covariate rows (m x p)
            covariate_names: names of the p columns of W
            k: person-time index per row (hazard models only)
            a: treatment per row (hazard models only)
            t_scale: default divisor of k for polynomial time terms
        """
        W = np.asarray(W, dtype=float)
        m = W.shape[0]
        columns = []
        for term in self.terms:
            if term.kind in HAZARD_ONLY_KINDS and (k is None or a is None):
                raise ConfigError(f"Basis term {term.kind!r} needs time and treatment inputs")
            divisor = term.t_scale or t_scale
            if term.kind == "intercept":
                block = np.ones((m, 1))
            elif term.kind == "time":
                u = np.asarray(k, dtype=float) / divisor
                block = np.column_stack([u ** d for d in range(1, term.degree + 1)])
            elif term.kind == "log_time":
                block = np.log(np.asarray(k, dtype=float))[:, None]
            elif term.kind == "treatment":
                block = np.asarray(a, dtype=float)[:, None]
            elif term.kind == "covariate":
                block = W[:, _select(term, covariate_names)[0]]
            elif term.kind == "indicator":
                j = _select(term, covariate_names)[0]
                block = (W[:, j] > term.threshold).astype(float)
            elif term.kind == "treatment_time":
                block = (np.asarray(a, dtype=float) * np.asarray(k, dtype=float) / divisor)[:, None]
            else:  # treatment_covariate
                block = np.asarray(a, dtype=float)[:, None] * W[:, _select(term, covariate_names)[0]]
            columns.append(term.scale * block.reshape(m, -1))
        if not columns:
            return np.zeros((m, 0))
        return np.hstack(columns)


def _select(term: BasisTerm, covariate_names: Sequence[str]) -> Tuple[List[int], List[str]]:
    if term.covariate is None:
        return list(range(len(covariate_names))), list(covariate_names)
    if term.covariate not in covariate_names:
        raise ConfigError(f"Basis term refers to unknown covariate {term.covariate!r}",
                          {"covariates": list(covariate_names)})
    return [list(covariate_names).index(term.covariate)], [term.covariate]


def default_hazard_basis() -> BasisSpec:
    """Main terms: intercept, linear time, treatment, every covariate"""
    return BasisSpec(terms=[
        BasisTerm(kind="intercept"),
        BasisTerm(kind="time"),
        BasisTerm(kind="treatment"),
        BasisTerm(kind="covariate"),
    ])


def default_propensity_basis() -> BasisSpec:
    return BasisSpec(terms=[BasisTerm(kind="intercept"), BasisTerm(kind="covariate")])


class NuisanceConfig(BaseModel):
    """Working-model bases and clamps for the four likelihood components"""
    model_config = ConfigDict(extra="forbid")

    failure_basis: BasisSpec = Field(default_factory=default_hazard_basis)
    censor_basis: BasisSpec = Field(default_factory=default_hazard_basis)
    propensity_basis: BasisSpec = Field(default_factory=default_propensity_basis)
    hazard_clamp: Tuple[float, float] = (1e-5, 1 - 1e-5)
    propensity_bounds: Tuple[float, float] = (0.01, 0.99)

    @model_validator(mode="after")
    def _check_bounds(self):
        for name in ("hazard_clamp", "propensity_bounds"):
            lo, hi = getattr(self, name)
            if not 0 < lo < hi < 1:
                raise ValueError(f"{name} must satisfy 0 < lo < hi < 1, got ({lo}, {hi})")
        return self
