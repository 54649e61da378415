"""Numerical laboratory for the fractional heat equation with a Hardy potential.

Submodules: specfun (Gamma, quadrature), constants (closed-form spectral
constants), kernel (angular kernel and power constants), discrete (radial
grids and dense operators), evolution (monotone truncated scheme),
analysis (inequality and Harnack checks) and cli.
"""

__version__ = "0.1.0"

from .constants import FracParams, HardyDerived, a_norm, alpha_of_lambda, derive, lambda_of_alpha, lambda_star, m_alpha, operator_norm, p_plus, psi
from .discrete import RadialGrid, assemble_operator, build_radial_grid, ground_state_transform, hardy_potential
from .errors import (
    AssemblyError,
    ConfigError,
    ConvergenceError,
    DomainError,
    FracHeatError,
    NoSolutionError,
    PoleError,
    PreconditionError,
    QuadratureError,
)
from .evolution import EvolutionConfig, Profile, RunReport, monotone_iteration
from .kernel import angular_kernel, log_potential_constant, power_constant

__all__ = [
    "__version__",
    "FracParams",
    "HardyDerived",
    "a_norm",
    "alpha_of_lambda",
    "derive",
    "lambda_of_alpha",
    "lambda_star",
    "m_alpha",
    "operator_norm",
    "p_plus",
    "psi",
    "RadialGrid",
    "assemble_operator",
    "build_radial_grid",
    "ground_state_transform",
    "hardy_potential",
    "EvolutionConfig",
    "Profile",
    "RunReport",
    "monotone_iteration",
    "angular_kernel",
    "log_potential_constant",
    "power_constant",
    "AssemblyError",
    "ConfigError",
    "ConvergenceError",
    "DomainError",
    "FracHeatError",
    "NoSolutionError",
    "PoleError",
    "PreconditionError",
    "QuadratureError",
]
