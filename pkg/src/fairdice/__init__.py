"""Coupled reduced climate emulation and optimal-growth economics.

Submodules: carbon (impulse-response CO2 pools), climate (three-layer energy
balance), econ (production, abatement, welfare), coupled (trajectory
simulation and SCC), optimize (box-constrained ascent), ensemble (prior
sampling and constraining), runner/cli (scenario execution), datagen
(desk-scale dataset construction).
"""

from .carbon import CarbonParams, CarbonState, compute_alpha, compute_iirf100, step_carbon
from .climate import EBMParams, co2_forcing, diagnose_ecs, diagnose_tcr, discretize
from .coupled import (
    ControlPath,
    EconSetup,
    InitialConditions,
    MemberClimate,
    Trajectory,
    simulate,
    social_cost_of_carbon,
)
from .econ import SCENARIO_PRESETS, EconParams, dice2016r_defaults, welfare
from .ensemble import fit_skew_normal, reweight_resample, rmse_filter, sample_kde
from .optimize import OptimizerConfig, optimize

__all__ = [
    "CarbonParams", "CarbonState", "compute_alpha", "compute_iirf100", "step_carbon",
    "EBMParams", "co2_forcing", "diagnose_ecs", "diagnose_tcr", "discretize",
    "ControlPath", "EconSetup", "InitialConditions", "MemberClimate", "Trajectory",
    "simulate", "social_cost_of_carbon",
    "SCENARIO_PRESETS", "EconParams", "dice2016r_defaults", "welfare",
    "fit_skew_normal", "reweight_resample", "rmse_filter", "sample_kde",
    "OptimizerConfig", "optimize",
]
