"""
Shared pytest fixtures: simulated datasets, hand-built prediction grids and a
clean environment for the settings layer
"""
import os
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from config.settings import reset_settings
from data.models import SurvivalDataset
from nuisance.fitting import fit_nuisance
from nuisance.models import ArmPredictions, hazard_to_survival
from simulation.dgp import DgpConfig, simulate

ENV_VARS = ("ENVIRONMENT", "LOG_LEVEL", "OUTPUT_DIR", "RNG_SEED", "THREADS", "MC_DRAWS", "CONFIG_DIR")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: Monte-Carlo runs; set RUN_SLOW=1 to include them")


def pytest_collection_modifyitems(config, items):
    if os.getenv("RUN_SLOW") == "1":
        return
    skip_slow = pytest.mark.skip(reason="slow; set RUN_SLOW=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def clean_settings(monkeypatch):
    for var in ENV_VARS:
        monkeypatch.delenv(var, raising=False)
    reset_settings()
    yield
    reset_settings()


@pytest.fixture(scope="session")
def sim_ds() -> SurvivalDataset:
    return simulate(DgpConfig(n=200, seed=11))


@pytest.fixture(scope="session")
def sim_fit(sim_ds):
    return fit_nuisance(sim_ds)


@pytest.fixture
def sim_csv(tmp_path, sim_ds) -> Path:
    path = tmp_path / "sim.csv"
    pd.DataFrame({"time": sim_ds.T, "event": sim_ds.delta, "treatment": sim_ds.A,
                  "W": sim_ds.W[:, 0]}).to_csv(path, index=False)
    return path


@pytest.fixture
def write_csv(tmp_path):
    def _write(text: str, name: str = "input.csv") -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path
    return _write


def make_predictions(hazard, g_a, arm, censor_survival=None, a: int = 1) -> ArmPredictions:
    """ArmPredictions from explicit grids; censoring defaults to none"""
    hazard = np.asarray(hazard, dtype=float)
    n, t_max = hazard.shape
    censor_survival = np.ones((n, t_max)) if censor_survival is None else np.asarray(censor_survival, dtype=float)
    return ArmPredictions(
        a=a,
        hazard=hazard,
        survival=hazard_to_survival(hazard),
        censor_survival=censor_survival,
        censor_left=np.hstack([np.ones((n, 1)), censor_survival[:, :-1]]),
        g_a=np.asarray(g_a, dtype=float),
        arm=np.asarray(arm, dtype=float),
    )


@pytest.fixture
def two_subject_case():
    """
    Subject 1: A=1, event at 2. Subject 2: A=0, censored at 1.
    Arm-1 hazard 0.5 everywhere, g = 0.5, no censoring.
    """
    ds = SurvivalDataset.from_arrays(W=[0.0, 1.0], A=[1, 0], T=[2, 1], delta=[1, 0])
    preds = make_predictions(np.full((2, 2), 0.5), g_a=[0.5, 0.5], arm=[1, 0])
    return ds, preds
