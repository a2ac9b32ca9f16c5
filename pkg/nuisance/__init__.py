"""
Nuisance package for the initial likelihood estimates
"""

from nuisance.basis import BasisTerm, BasisSpec, NuisanceConfig, default_hazard_basis, default_propensity_basis
from nuisance.models import (
    HazardModel, PropensityModel, NuisanceFit, ArmPredictions, hazard_to_survival, survival_to_hazard,
)
from nuisance.fitting import (
    fit_failure_hazard, fit_censor_hazard, fit_propensity, fit_nuisance, predict_matrices,
)

__all__ = [
    "BasisTerm", "BasisSpec", "NuisanceConfig", "default_hazard_basis", "default_propensity_basis",
    "HazardModel", "PropensityModel", "NuisanceFit", "ArmPredictions",
    "hazard_to_survival", "survival_to_hazard",
    "fit_failure_hazard", "fit_censor_hazard", "fit_propensity", "fit_nuisance", "predict_matrices",
]
