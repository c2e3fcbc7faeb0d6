"""Diffuse phase boundaries of the compressible Navier-Stokes-Allen-Cahn system.

Heteroclinic traveling waves by shooting, their continuation in density ratio
and mass transfer, the Korteweg limit, and a two-phase mechanical EOS.
"""

__version__ = "0.1.0"

from .binary_eos import mixture_energy, mixture_pressure, power_law, solve_phase_volumes
from .connect import (
    Profile,
    ShootingError,
    SolverSettings,
    closed_form_kink,
    continue_family,
    estimate_epsilon0,
    find_heteroclinic,
    maxwell_select_P,
    sweep_grid,
)
from .eos import MixtureParams, WellSpec, quartic_primitive, tilted_quartic, validate_well
from .nsk import equivalence_check, nsk_wave_residual, subsonicity_check
from .profile_ode import WaveParams, classify_wave, equilibria, linearize_at

__all__ = [
    "MixtureParams",
    "Profile",
    "ShootingError",
    "SolverSettings",
    "WaveParams",
    "WellSpec",
    "classify_wave",
    "closed_form_kink",
    "continue_family",
    "equilibria",
    "equivalence_check",
    "estimate_epsilon0",
    "find_heteroclinic",
    "linearize_at",
    "maxwell_select_P",
    "mixture_energy",
    "mixture_pressure",
    "nsk_wave_residual",
    "power_law",
    "quartic_primitive",
    "solve_phase_volumes",
    "subsonicity_check",
    "sweep_grid",
    "tilted_quartic",
    "validate_well",
]
