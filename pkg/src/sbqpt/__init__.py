"""Bound-state quantum phase transition in the ohmic spin-boson model."""

__version__ = "0.1.0"

from .errors import ConvergenceError, DomainError, NumericalError, PhaseError, SBQPTError
from .spectral import (ModelParams, displaced_boson_number, eta_exponent, kernel, kernel_closed,
                       renormalized_spectral_density, residue_integral, resolvent_integral,
                       spectral_density)
from .variational import VariationalSolution, displacement_constant_C, solve_eta
from .spectrum import (BoundStateResult, EnergyDerivative, GroundState, bound_state, critical_alpha,
                       ground_energy, ground_energy_derivative, level_gap, y_function)
from .dynamics import DynamicsTrace, simulate
from .phasemap import PhaseDiagram, sweep

__all__ = [
    "__version__",
    "SBQPTError", "DomainError", "PhaseError", "NumericalError", "ConvergenceError",
    "ModelParams", "spectral_density", "renormalized_spectral_density", "eta_exponent",
    "displaced_boson_number", "resolvent_integral", "residue_integral", "kernel", "kernel_closed",
    "VariationalSolution", "solve_eta", "displacement_constant_C",
    "BoundStateResult", "GroundState", "EnergyDerivative", "bound_state", "critical_alpha",
    "ground_energy", "ground_energy_derivative", "level_gap", "y_function",
    "DynamicsTrace", "simulate", "PhaseDiagram", "sweep",
]
