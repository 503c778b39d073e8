r"""Transfer kernel of the Y-averaged equation.

With :math:`a = 2\sqrt{\beta s}`, :math:`b = 2\sqrt{\beta t}` and
:math:`c = 2\sqrt{\beta T}` the kernel is

.. math::
    \psi(s, t, T) = \frac{I_0(b) K_1(a) + K_0(b) I_1(a)}
                         {I_0(c) K_1(a) + K_0(c) I_1(a)} .

Multiplying numerator and denominator by ``a`` turns every ``K_1(a)`` into the
finite product ``a K_1(a)``, which is what makes ``s = 0`` harmless. All
evaluations go through the exponentially scaled Bessel functions; the
remaining exponential factors are always of the form ``exp(x)`` with
``x <= 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import bessel
from .errors import DomainError

__all__ = [
    "ModelParams",
    "SeparableKernel",
    "psi",
    "psi_prime",
    "psi_diag",
    "z_denominator",
]


@dataclass(frozen=True)
class ModelParams:
    """Delay strength ``beta`` and horizon ``T`` of one equation instance."""

    beta: float
    horizon: float

    def __post_init__(self):
        if not (self.beta >= 0 and math.isfinite(self.beta)):
            raise DomainError(f"beta must be a finite non-negative number, got {self.beta}")
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise DomainError(f"horizon must be positive, got {self.horizon}")

    def arg(self, time):
        """Bessel argument ``2 * sqrt(beta * time)``."""
        return 2.0 * np.sqrt(self.beta * np.asarray(time, dtype=float))

    @property
    def c(self) -> float:
        return 2.0 * math.sqrt(self.beta * self.horizon)


def _scalar_or_array(x, like_scalar):
    return float(x) if like_scalar else x


def _check_times(params, *times):
    for x in times:
        arr = np.asarray(x, dtype=float)
        if np.any(np.isnan(arr)) or np.any(arr < 0) or np.any(arr > params.horizon):
            raise DomainError(f"times must lie in [0, T={params.horizon}]")


def _k0e_or_zero(w):
    """k0e(w) where w > 0, else 0; only used against factors vanishing at 0."""
    w = np.asarray(w, dtype=float)
    out = np.zeros_like(w)
    pos = w > 0
    if pos.any():
        out[pos] = bessel.k0e(w[pos])
    return out


def _denominator_hat(a, c):
    r"""``i0e(c) * aK1e(a) + k0e(c) * a * i1e(a) * exp(2a - 2c)``.

    Equals :math:`a\,(I_0(c)K_1(a) + K_0(c)I_1(a))\, e^{a - c}`.
    """
    a = np.asarray(a, dtype=float)
    first = bessel.i0e(c) * bessel.scaled_wk1e(a)
    second = _k0e_or_zero(np.full_like(a, c)) * a * bessel.i1e(a) * np.exp(2.0 * a - 2.0 * c)
    return first + second


def psi(s, t, params: ModelParams):
    """Kernel value ``psi(s, t, T)`` for ``0 <= s <= t <= T``.

    At ``s = 0`` this returns the limit ``I_0(2 sqrt(beta t)) / I_0(2 sqrt(beta T))``.
    Broadcasts over ``s`` and ``t``.
    """
    scalar = np.ndim(s) == 0 and np.ndim(t) == 0
    s, t = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
    _check_times(params, s, t)
    if np.any(s > t):
        raise DomainError("psi requires s <= t")
    a, b, c = params.arg(s), params.arg(t), params.c
    num = bessel.i0e(b) * bessel.scaled_wk1e(a) + _k0e_or_zero(b) * a * bessel.i1e(a) * np.exp(
        2.0 * a - 2.0 * b
    )
    out = np.exp(b - c) * num / _denominator_hat(a, c)
    return _scalar_or_array(out, scalar)


def psi_prime(s, t, params: ModelParams):
    r"""Derivative :math:`\partial_s \psi(s, t, T)` for ``0 < s <= t <= T``.

    Non-negative, and zero at ``t = T``. The ``1/(2s)`` prefactor cancels
    against ``a**2 = 4 beta s`` so the value stays bounded as ``s -> 0``,
    but ``s = 0`` itself is rejected.
    """
    scalar = np.ndim(s) == 0 and np.ndim(t) == 0
    s, t = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(t, dtype=float))
    _check_times(params, s, t)
    if np.any(s <= 0):
        raise DomainError("psi_prime requires s > 0")
    if np.any(s > t):
        raise DomainError("psi_prime requires s <= t")
    if params.beta == 0:
        return _scalar_or_array(np.zeros(s.shape), scalar)
    a, b, c = params.arg(s), params.arg(t), params.c
    cross = bessel.k0e(b) * bessel.i0e(c) - bessel.i0e(b) * bessel.k0e(c) * np.exp(2.0 * b - 2.0 * c)
    out = 2.0 * params.beta * np.exp(2.0 * a - b - c) * cross / _denominator_hat(a, c) ** 2
    return _scalar_or_array(out, scalar)


def z_denominator(s, params: ModelParams):
    """``2 sqrt(beta s) (I_0(c) K_1(a) + K_0(c) I_1(a))``; equals ``I_0(c)`` at ``s = 0``.

    Dividing the martingale density ``M(s)`` by this gives ``Z(s)``.
    """
    scalar = np.ndim(s) == 0
    s = np.asarray(s, dtype=float)
    _check_times(params, s)
    a, c = params.arg(s), params.c
    out = np.exp(c - a) * _denominator_hat(a, c)
    return _scalar_or_array(out, scalar)


def psi_diag(t, params: ModelParams):
    """Diagonal ``psi(t, t, T)``: ``1/I_0(c)`` at ``t = 0``, 1 at ``t = T``, increasing."""
    scalar = np.ndim(t) == 0
    t = np.asarray(t, dtype=float)
    _check_times(params, t)
    a, c = params.arg(t), params.c
    out = np.exp(a - c) / _denominator_hat(a, c)
    return _scalar_or_array(out, scalar)


class SeparableKernel:
    r"""Grid tabulation of the product form :math:`\psi(s,t) = A(t)G(s) + B(t)H(s)`.

    With :math:`\hat D(a) = \tilde I_0(c)\,a\tilde K_1(a) + \tilde K_0(c)\,a\tilde I_1(a)e^{2a-2c}`::

        A(t) = exp(b - c) i0e(b)        G(s) = a k1e(a) / D(a)
        B(t) = exp(c - b) k0e(b)        H(s) = a i1e(a) exp(2a - 2c) / D(a)

    ``B`` is infinite at ``t = 0`` where ``H`` vanishes; the ``t = 0`` column
    is handled separately by callers. Usable while ``exp(c)`` fits in a
    double, i.e. ``2 sqrt(beta T) < 700``.
    """

    def __init__(self, nodes, params: ModelParams):
        nodes = np.asarray(nodes, dtype=float)
        _check_times(params, nodes)
        c = params.c
        if c > 700.0:
            raise DomainError("beta * T too large for the tabulated kernel (2 sqrt(beta T) > 700)")
        self.params = params
        self.nodes = nodes
        if params.beta == 0:
            # psi == 1: the classical martingale-representation case
            one, zero = np.ones_like(nodes), np.zeros_like(nodes)
            self.A, self.G, self.B, self.H = one, one, zero, zero
            self.diag = one
            self.at_zero = one
            return
        x = params.arg(nodes)
        dhat = _denominator_hat(x, c)
        with np.errstate(divide="ignore", invalid="ignore"):
            self.A = np.exp(x - c) * bessel.i0e(x)
            self.B = np.where(x > 0, np.exp(c - x) * _k0e_or_zero(x), np.inf)
        self.G = bessel.scaled_wk1e(x) / dhat
        self.H = x * bessel.i1e(x) * np.exp(2.0 * x - 2.0 * c) / dhat
        self.diag = np.exp(x - c) / dhat
        self.at_zero = self.A * self.G[0]

    def column(self, n: int):
        """``psi(nodes[:n+1], nodes[n])``."""
        if n == 0:
            return np.array([self.at_zero[0]])
        return self.A[n] * self.G[: n + 1] + self.B[n] * self.H[: n + 1]
