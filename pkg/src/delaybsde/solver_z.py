r"""Closed-form solution of the BSDE driven by the running mean of ``Z``

.. math::
    Y(t) = \xi - \int_t^T \frac{\beta}{s}\int_0^s Z(u)\,du\,ds - \int_t^T Z(s)\,dW(s).

Under the measure in which ``W~ = W + int beta ln(T/s) ds`` is Brownian, let
``V~(t) = E~[xi | F_t]`` with density ``Z``. Then

.. math::
    Y(t) = \tilde V(t) - \beta \ln(T/t) \int_0^t Z(s)\,ds ,

and ``Y(0) = E~[xi]`` since ``t ln t -> 0``. Paths passed to this module are
paths of ``W~``.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, UnsupportedPayoffError
from .kernel import ModelParams
from .paths import BrownianPath
from .payoffs import ExpIntegral, Payoff, girsanov_shift, log_integral
from .solver_y import SolutionPath, running_mean

__all__ = [
    "static_rho_z",
    "rho_star",
    "solve_z_path",
    "two_factor_decomposition",
    "penalty_rate_representation",
    "dynamic_rho_z",
    "physical_path",
    "residual_z",
]


def static_rho_z(payoff: Payoff, params: ModelParams) -> float:
    """``Y(0) = E~[xi]``."""
    payoff._require_q()
    return payoff.mean_q(params)


def rho_star(payoff: Payoff, params: ModelParams) -> float:
    """Value of the constant-penalty comparison model, ``exp(int h^2/2 - beta int h)``.

    Only defined for ``exp(int h dW)`` payoffs.
    """
    if not isinstance(payoff, ExpIntegral):
        raise UnsupportedPayoffError("rho_star is only available for exp_integral payoffs")
    T = params.horizon
    return math.exp(0.5 * payoff.h.integral(0.0, T, 2) - params.beta * payoff.h.integral(0.0, T, 1))


def _log_factor(nodes, horizon):
    out = np.zeros_like(nodes)
    out[1:] = np.log(horizon / nodes[1:])
    return out


def _running_z(payoff, path, params):
    cells = payoff.density_q_trapezoid(path, params) * path.grid.dt
    out = np.zeros(path.w.shape)
    np.cumsum(cells, axis=-1, out=out[..., 1:])
    return out


def solve_z_path(payoff: Payoff, path_tilde: BrownianPath, params: ModelParams) -> SolutionPath:
    """``(Y, Z)`` along a path of ``W~``; ``Z`` is the ``Q~`` representation density."""
    payoff._require_q()
    if abs(path_tilde.grid.horizon - params.horizon) > 1e-12 * params.horizon:
        raise DomainError("path horizon and model horizon differ")
    v = payoff.conditional_mean_q(path_tilde, params)
    z = payoff.density_q(path_tilde, params)
    penalty = params.beta * _log_factor(path_tilde.grid.nodes, params.horizon) * _running_z(payoff, path_tilde, params)
    y = v - penalty
    return SolutionPath(path_tilde.grid, y, z, v, z)


def two_factor_decomposition(payoff: Payoff, path_tilde: BrownianPath, params: ModelParams, t: float):
    """Split ``Y(t)`` into the conditional mean ``V~(t)`` and the penalty it subtracts.

    Returns ``(x, penalty)`` with ``Y(t) = x - penalty``.
    """
    payoff._require_q()
    k = path_tilde.grid.index_of(t)
    x = payoff.conditional_mean_q(path_tilde, params)[..., k]
    if k == 0:
        return x, np.zeros_like(x)
    running = _running_z(payoff, path_tilde, params)[..., k]
    return x, params.beta * math.log(params.horizon / path_tilde.grid.nodes[k]) * running


def penalty_rate_representation(payoff: Payoff, path_tilde: BrownianPath, params: ModelParams, t: float):
    """Per-cell increments ``dV~_i - beta ln(T/t) Z_i dt`` for the value at ``t``.

    ``Z >= 0`` stands in for the quadratic-variation rate ``sqrt(d[V~,V~]/ds)``.
    ``V~(0)`` plus the sum of the first ``k`` increments, where ``t`` is node
    ``k``, reproduces ``Y(t)`` up to the left-point quadrature error. The
    penalty rate depends on ``t`` through ``ln(T/t)``, so each ``t`` has its
    own set of increments.
    """
    payoff._require_q()
    k = path_tilde.grid.index_of(t)
    dv = np.diff(payoff.conditional_mean_q(path_tilde, params), axis=-1)
    if k == 0:
        return dv
    rate = params.beta * math.log(params.horizon / path_tilde.grid.nodes[k])
    return dv - rate * payoff.density_q(path_tilde, params) * path_tilde.grid.dt


def dynamic_rho_z(payoff: Payoff, path_tilde: BrownianPath, params: ModelParams, t: float):
    """``rho_{t,T}(xi) = Y(t)``."""
    return solve_z_path(payoff, path_tilde, params).at(t)


def physical_path(path_tilde: BrownianPath, params: ModelParams) -> BrownianPath:
    """The ``P``-Brownian path ``W = W~ - beta (t ln(T/t) + t)`` on the same grid."""
    return path_tilde.shifted(girsanov_shift(path_tilde.grid.nodes, params))


def residual_z(sol: SolutionPath, path_tilde: BrownianPath, params: ModelParams, times) -> np.ndarray:
    """Discrete residual of the integral equation at each of ``times``.

    ``R(t) = Y(t) - xi + sum_{s>=t} beta Zbar(s) ds + sum_{s>=t} Z dW`` where
    ``dW = dW~ - beta ln(T/s) ds`` uses the exact cell integral of the log.
    """
    grid = path_tilde.grid
    nodes = grid.nodes
    zbar = running_mean(np.concatenate([sol.z, sol.z[..., -1:]], axis=-1), grid)
    drift = params.beta * zbar[..., :-1] * grid.dt
    dw = path_tilde.increments - params.beta * log_integral(nodes[:-1], nodes[1:], params.horizon)
    tail = np.cumsum((drift + sol.z * dw)[..., ::-1], axis=-1)[..., ::-1]
    xi = sol.y[..., -1]
    out = []
    for t in times:
        k = grid.index_of(t)
        out.append(sol.y[..., k] - xi + tail[..., k])
    return np.stack(out, axis=-1)
