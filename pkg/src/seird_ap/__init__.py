"""Asymptotic-preserving kinetic and reaction-diffusion SEIRD solvers."""

from .grid import SpatialGrid, VelocityGrid, build_spatial_grid, build_velocity_grid, moment
from .model import (COMPARTMENTS, SPECIES, ModelParams, TransmissionRate, beta_at, beta_for_r0,
                    kinetic_interaction, r0, reaction_terms, sigma_from_diffusivity)
from .macroscale import MacroState, laplacian, macro_rd_step, run_macro
from .kinetic import BoundaryCondition, KineticState, ap_step, run_kinetic
from .scenarios import SCENARIOS, Scenario, get_scenario
from .stepping import BlowUpError, StepSizeError

__version__ = "0.1.0"

__all__ = [
    "SpatialGrid", "VelocityGrid", "build_spatial_grid", "build_velocity_grid", "moment",
    "COMPARTMENTS", "SPECIES", "ModelParams", "TransmissionRate", "beta_at", "beta_for_r0",
    "kinetic_interaction", "r0", "reaction_terms", "sigma_from_diffusivity",
    "MacroState", "laplacian", "macro_rd_step", "run_macro",
    "BoundaryCondition", "KineticState", "ap_step", "run_kinetic",
    "SCENARIOS", "Scenario", "get_scenario", "BlowUpError", "StepSizeError",
]
