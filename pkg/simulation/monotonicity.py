"""
How often each estimator returns a non-increasing curve under repeated subsampling
"""
import logging
from typing import Any, Dict, Optional, Sequence

import numpy as np
import pandas as pd

from data.loader import subsample
from data.models import SurvivalDataset
from errors import ConfigError, SurvivalToolError
from estimators.models import Method
from estimators.runner import run_method
from nuisance.basis import NuisanceConfig
from nuisance.fitting import fit_nuisance

logger = logging.getLogger(__name__)


def monotonicity_experiment(ds: SurvivalDataset, subsample_sizes: Sequence[int], reps: int,
                            methods: Sequence[str], seed: int = 0, arms: Sequence[int] = (1,),
                            nuisance: Optional[NuisanceConfig] = None,
                            targeting: Optional[Dict[str, Any]] = None) -> pd.DataFrame:
    """
    Percentage of monotone curves per method (columns) and subsample size (rows).

    Each (size, rep) draws its subsample from SeedSequence([seed, size, rep]);
    runs that fail are left out of the denominator and logged.
    """
    methods = [Method.parse(m) if isinstance(m, str) else m for m in methods]
    too_big = [s for s in subsample_sizes if s > ds.n]
    if too_big:
        raise ConfigError(f"Subsample sizes {too_big} exceed n={ds.n}")
    if reps < 1:
        raise ConfigError(f"reps must be positive, got {reps}")
    targeting = dict(targeting or {})

    rows = []
    for size in subsample_sizes:
        monotone = {m: 0 for m in methods}
        runs = {m: 0 for m in methods}
        for rep in range(reps):
            rng = np.random.default_rng(np.random.SeedSequence([seed, size, rep]))
            sub = subsample(ds, size, rng)
            try:
                fit = fit_nuisance(sub, nuisance)
            except SurvivalToolError as e:
                logger.warning(f"Subsample n={size} rep={rep}: nuisance fit failed ({e})")
                continue
            for method in methods:
                for a in arms:
                    try:
                        estimate = run_method(method, fit, sub, a, **targeting)
                    except SurvivalToolError as e:
                        logger.warning(f"Subsample n={size} rep={rep}: {method.value} arm {a} failed ({e})")
                        continue
                    runs[method] += 1
                    monotone[method] += estimate.is_monotone()
        row = {"n": size}
        row.update({m.value: 100.0 * monotone[m] / runs[m] if runs[m] else np.nan for m in methods})
        rows.append(row)
        logger.info(f"Monotonicity at n={size}: " + ", ".join(f"{m.value}={row[m.value]:.0f}%" for m in methods))
    return pd.DataFrame(rows, columns=["n"] + [m.value for m in methods])
