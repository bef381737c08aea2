"""Spherically symmetric gas-vacuum free boundary flows with damping.

Barenblatt reference profiles, the scalar corrector ODE, a Lagrangian
perturbation solver on a fixed reference grid, and the weighted energy /
decay-rate diagnostics that go with it.
"""

from .barenblatt import BarenblattParams, DomainError, derive_constants
from .corrector import CorrectorPath, eval_tilde_eta_r, solve_corrector
from .diagnostics import energy_levels, fit_rate, rate_report, vacuum_slope
from .lagrangian_solver import InitialDataSpec, JacobianLoss, LagrangianSolver, PerturbationState
from .weighted_calculus import Grid, build_grid, hardy_ratio, weighted_integral

__all__ = [
    "BarenblattParams",
    "CorrectorPath",
    "DomainError",
    "Grid",
    "InitialDataSpec",
    "JacobianLoss",
    "LagrangianSolver",
    "PerturbationState",
    "build_grid",
    "derive_constants",
    "energy_levels",
    "eval_tilde_eta_r",
    "fit_rate",
    "hardy_ratio",
    "rate_report",
    "solve_corrector",
    "vacuum_slope",
    "weighted_integral",
]

__version__ = "0.1.0"
