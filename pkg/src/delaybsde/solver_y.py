r"""Closed-form solution of the BSDE driven by the running mean of ``Y``

.. math::
    Y(t) = \xi - \int_t^T \frac{\beta}{s}\int_0^s Y(u)\,du\,ds - \int_t^T Z(s)\,dW(s).

With ``V(t) = E[xi | F_t]`` and ``xi = E[xi] + int M dW`` the solution is

.. math::
    Y(t) = \psi(t,t,T)V(t) - \int_0^t V(s)\,\partial_s\psi(s,t,T)\,ds, \qquad
    Z(t) = M(t) / \mathrm{zden}(t),

see :mod:`delaybsde.kernel` for ``psi`` and ``zden``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import bessel
from .errors import DomainError
from .kernel import ModelParams, SeparableKernel, psi, psi_diag, z_denominator
from .paths import BrownianPath, TimeGrid
from .payoffs import Payoff

__all__ = [
    "SolutionPath",
    "static_rho_y",
    "solve_y_path",
    "solve_y_path_stochastic",
    "third_representation_y",
    "dynamic_rho_y",
    "deterministic_solve",
    "residual_y",
    "running_mean",
]


@dataclass(frozen=True)
class SolutionPath:
    """``y`` on nodes ``(..., n + 1)``; ``z`` on cells ``(..., n)`` (left-node values).

    ``v`` is the conditional-mean process the solution was built from and
    ``density`` its representation integrand (``M`` or ``Z``), both optional.
    """

    grid: TimeGrid
    y: np.ndarray
    z: np.ndarray
    v: np.ndarray | None = None
    density: np.ndarray | None = None

    def at(self, t: float) -> np.ndarray:
        return self.y[..., self.grid.index_of(t)]


def static_rho_y(payoff: Payoff, params: ModelParams) -> float:
    """``Y(0) = E[xi] / I_0(2 sqrt(beta T))``."""
    c = params.c
    return payoff.mean_p(params.horizon) * float(np.exp(-c)) / bessel.i0e(c)


@lru_cache(maxsize=32)
def _kernel(grid: TimeGrid, params: ModelParams) -> SeparableKernel:
    return SeparableKernel(grid.nodes, params)


@lru_cache(maxsize=32)
def _zden(grid: TimeGrid, params: ModelParams) -> np.ndarray:
    return z_denominator(grid.nodes[:-1], params)


def solve_y_path(payoff: Payoff, path: BrownianPath, params: ModelParams) -> SolutionPath:
    """Solution along ``path`` by summation by parts.

    ``V`` is held constant on each cell, so ``int_0^t V dpsi`` becomes
    ``sum_i V_i (psi(t_{i+1}, t) - psi(t_i, t))`` and the separable form of
    ``psi`` turns all nodes into two cumulative sums.
    """
    _check_grid(path, params)
    kern = _kernel(path.grid, params)
    v = payoff.conditional_mean_p(path)
    m = payoff.density_p(path)
    sg = np.cumsum(v[..., :-1] * np.diff(kern.G), axis=-1)
    sh = np.cumsum(v[..., :-1] * np.diff(kern.H), axis=-1)
    y = np.empty(v.shape)
    y[..., 0] = kern.diag[0] * v[..., 0]
    y[..., 1:] = kern.diag[1:] * v[..., 1:] - kern.A[1:] * sg - kern.B[1:] * sh
    y[..., -1] = v[..., -1]
    z = m / _zden(path.grid, params)
    return SolutionPath(path.grid, y, z, v, m)


def solve_y_path_stochastic(payoff: Payoff, path: BrownianPath, params: ModelParams) -> SolutionPath:
    """Same solution from ``psi(0,t)E[xi] + sum_i psi(t_i, t) M_i dW_i``.

    The terminal value is the discrete sum itself, so it matches ``xi`` only
    up to discretization error.
    """
    _check_grid(path, params)
    kern = _kernel(path.grid, params)
    v = payoff.conditional_mean_p(path)
    m = payoff.density_p(path)
    dw = path.increments
    sg = np.cumsum(kern.G[:-1] * m * dw, axis=-1)
    sh = np.cumsum(kern.H[:-1] * m * dw, axis=-1)
    v0 = v[..., :1]
    y = np.empty(v.shape)
    y[..., :1] = kern.diag[0] * v0
    y[..., 1:] = kern.A[1:] * kern.G[0] * v0 + kern.A[1:] * sg + kern.B[1:] * sh
    z = m / _zden(path.grid, params)
    return SolutionPath(path.grid, y, z, v, m)


def third_representation_y(payoff: Payoff, path: BrownianPath, params: ModelParams, t: float):
    """``Y(t) = psi(0,t)V(t) - int_0^t (V(s) - V(t)) dpsi(s,t)``, from direct kernel calls.

    The integral term is the disappointment/elation part of the value.
    """
    k = path.grid.index_of(t)
    v = payoff.conditional_mean_p(path)
    if k == 0:
        return float(psi_diag(0.0, params)) * v[..., 0]
    col = psi(path.grid.nodes[: k + 1], path.grid.nodes[k], params)
    vk = v[..., k : k + 1]
    return col[0] * v[..., k] - np.sum((v[..., :k] - vk) * np.diff(col), axis=-1)


def dynamic_rho_y(payoff: Payoff, path: BrownianPath, params: ModelParams, t: float):
    """``rho_{t,T}(xi) = Y(t)``."""
    return solve_y_path(payoff, path, params).at(t)


def _check_grid(path: BrownianPath, params: ModelParams):
    if abs(path.grid.horizon - params.horizon) > 1e-12 * params.horizon:
        raise DomainError("path horizon and model horizon differ")


def _kernel_moments(x, beta):
    """Antiderivatives in ``x`` of ``K_0, x K_0, I_0, x I_0`` at ``2 sqrt(beta x)``."""
    w = 2.0 * np.sqrt(beta * x)
    w2 = w * w
    wk1 = bessel.scaled_wk1(w)
    k0 = np.zeros_like(w)
    k0[w > 0] = bessel.bessel_k(0, w[w > 0])
    i0 = bessel.bessel_i(0, w)
    wi1 = w * bessel.bessel_i(1, w)
    pk0 = -wk1 / (2.0 * beta)
    pk1 = -(w2 * wk1 + 2.0 * w2 * k0 + 4.0 * wk1) / (8.0 * beta**2)
    pi0 = wi1 / (2.0 * beta)
    pi1 = (w2 * wi1 - 2.0 * w2 * i0 + 4.0 * wi1) / (8.0 * beta**2)
    return (pk0, pk1), (pi0, pi1), i0, k0


def _product_integral(f, nodes, moments):
    """Cumulative ``int_0^t f g`` with ``f`` piecewise linear and ``g`` integrated exactly."""
    p0, p1 = moments
    d0 = np.diff(p0)
    d1 = np.diff(p1) - nodes[:-1] * d0
    slope = np.diff(f) / np.diff(nodes)
    cells = f[:-1] * d0 + slope * d1
    return np.concatenate([[0.0], np.cumsum(cells)])


def deterministic_solve(y0: float, f, nodes, params: ModelParams) -> np.ndarray:
    r"""Continuous solution of ``y(t) = y0 + int_0^t (beta/s) int_0^s y du ds + f(t)``.

    Uses

    .. math::
        y = y_0 I_0(b) + f + 2\beta I_0(b)\int_0^t f(x)K_0(2\sqrt{\beta x})dx
            - 2\beta K_0(b)\int_0^t f(x) I_0(2\sqrt{\beta x})dx,

    with ``b = 2 sqrt(beta t)``. ``f`` is interpolated linearly between the
    ``nodes`` and integrated against exact Bessel moments, which keeps the
    logarithmic singularity of ``K_0`` at the origin out of the error.
    """
    f = np.asarray(f, dtype=float)
    nodes = np.asarray(nodes, dtype=float)
    if f.shape != nodes.shape:
        raise DomainError("f must be sampled on the nodes")
    if f[0] != 0.0:
        raise DomainError("f(0) must be 0")
    beta = params.beta
    if beta == 0:
        return y0 + f
    mk, mi, i0v, k0v = _kernel_moments(nodes, beta)
    jk = _product_integral(f, nodes, mk)
    ji = _product_integral(f, nodes, mi)
    return y0 * i0v + f + 2.0 * beta * i0v * jk - 2.0 * beta * k0v * ji


def running_mean(values, grid: TimeGrid) -> np.ndarray:
    """``(1/s) int_0^s values`` on nodes (trapezoid), ``values[..., 0]`` at ``s = 0``."""
    dt = grid.dt
    cum = np.zeros(values.shape)
    np.cumsum(0.5 * dt * (values[..., 1:] + values[..., :-1]), axis=-1, out=cum[..., 1:])
    out = np.empty(values.shape)
    out[..., 0] = values[..., 0]
    out[..., 1:] = cum[..., 1:] / grid.nodes[1:]
    return out


def residual_y(sol: SolutionPath, path: BrownianPath, params: ModelParams, times) -> np.ndarray:
    """Discrete residual of the integral equation at each of ``times``.

    ``R(t) = Y(t) - xi + sum_{s>=t} beta Ybar(s) ds + sum_{s>=t} Z dW`` with
    left-point sums; shape ``(..., len(times))``.
    """
    grid = path.grid
    ybar = running_mean(sol.y, grid)
    drift = params.beta * ybar[..., :-1] * grid.dt
    noise = sol.z * path.increments
    tail = np.cumsum((drift + noise)[..., ::-1], axis=-1)[..., ::-1]
    xi = sol.y[..., -1]
    out = []
    for t in times:
        k = grid.index_of(t)
        out.append(sol.y[..., k] - xi + tail[..., k])
    return np.stack(out, axis=-1)
