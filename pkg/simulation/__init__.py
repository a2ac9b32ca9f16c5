"""
Simulation package
Data-generating process, oracle curves, the Monte-Carlo study engine and the
monotonicity experiment
"""

from .dgp import DgpConfig, simulate, oracle_curve, oracle_closed_form, simulation_nuisance_config
from .study_engine import StudyEngine, RepResult, run_study
from .monotonicity import monotonicity_experiment

__all__ = [
    "DgpConfig", "simulate", "oracle_curve", "oracle_closed_form", "simulation_nuisance_config",
    "StudyEngine", "RepResult", "run_study", "monotonicity_experiment",
]
