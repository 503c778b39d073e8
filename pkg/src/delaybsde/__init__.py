"""Closed-form solvers for linear BSDEs whose generator is a running average of Y or Z."""

from .errors import DomainError, UnsupportedPayoffError
from .kernel import ModelParams, psi, psi_diag, psi_prime, z_denominator
from .montecarlo import MCEstimate, SimConfig, estimate, probability_below, simulate_paths
from .paths import BrownianPath, TimeGrid
from .payoffs import Constant, ExpBM, ExpIntegral, IndicatorBM, LinearBM, StepFunction, payoff_from_json
from .solver_y import deterministic_solve, dynamic_rho_y, solve_y_path, static_rho_y
from .solver_z import dynamic_rho_z, rho_star, solve_z_path, static_rho_z

__all__ = [
    "DomainError",
    "UnsupportedPayoffError",
    "ModelParams",
    "psi",
    "psi_diag",
    "psi_prime",
    "z_denominator",
    "MCEstimate",
    "SimConfig",
    "estimate",
    "probability_below",
    "simulate_paths",
    "BrownianPath",
    "TimeGrid",
    "Constant",
    "ExpBM",
    "ExpIntegral",
    "IndicatorBM",
    "LinearBM",
    "StepFunction",
    "payoff_from_json",
    "deterministic_solve",
    "dynamic_rho_y",
    "solve_y_path",
    "static_rho_y",
    "dynamic_rho_z",
    "rho_star",
    "solve_z_path",
    "static_rho_z",
]
