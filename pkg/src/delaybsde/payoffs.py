r"""Closed-form catalog of terminal conditions.

Every payoff knows its conditional mean and its martingale-representation
density in closed form, both under the physical measure ``P`` and under the
shifted measure ``Q~`` in which

.. math::
    \tilde W(t) = W(t) + \int_0^t \beta \ln(T/s)\, ds = W(t) + \beta(t\ln(T/t) + t).

Array conventions on a grid with ``n`` steps:

* conditional means are node-valued, shape ``(..., n + 1)``; the last node is
  the realized payoff;
* densities are cell-valued, shape ``(..., n)``; entry ``i`` is the integrand
  used on the cell ``(t_i, t_{i+1}]`` in left-point stochastic sums.

Stochastic integrals of a step function ``h`` are discretized as
``sum_i hbar_i dW_i`` with ``hbar_i`` the average of ``h`` over cell ``i``,
which is exact whenever the jumps of ``h`` sit on grid nodes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np
from scipy.special import ndtr

from .errors import DomainError, UnsupportedPayoffError
from .kernel import ModelParams
from .paths import BrownianPath

__all__ = [
    "StepFunction",
    "Payoff",
    "Constant",
    "LinearBM",
    "ExpBM",
    "ExpIntegral",
    "IndicatorBM",
    "payoff_from_dict",
    "payoff_from_json",
    "log_integral",
    "log_sq_integral",
    "mean_p",
    "conditional_mean_p",
    "martingale_density_p",
    "girsanov_drift",
    "girsanov_shift",
    "conditional_mean_q",
    "martingale_density_q",
    "radon_nikodym",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def log_integral(a, b, horizon):
    """``int_a^b ln(T/s) ds`` via the antiderivative ``s ln(T/s) + s``."""

    def anti(s):
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            v = s * np.log(horizon / s) + s
        return np.where(s > 0, v, 0.0)

    return anti(b) - anti(a)


def log_sq_integral(a, b, horizon):
    """``int_a^b ln(T/s)^2 ds`` via ``s (L^2 + 2L + 2)``, ``L = ln(T/s)``."""

    def anti(s):
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            lg = np.log(horizon / s)
            v = s * (lg * lg + 2.0 * lg + 2.0)
        return np.where(s > 0, v, 0.0)

    return anti(b) - anti(a)


def girsanov_drift(s, params: ModelParams):
    """Drift ``beta ln(T/s)`` of the measure change; ``s`` must be in ``(0, T]``."""
    arr = np.asarray(s, dtype=float)
    if np.any(arr <= 0) or np.any(arr > params.horizon):
        raise DomainError("girsanov_drift needs 0 < s <= T")
    out = params.beta * np.log(params.horizon / arr)
    return float(out) if out.ndim == 0 else out


def girsanov_shift(t, params: ModelParams):
    """Integrated drift ``int_0^t beta ln(T/s) ds = beta (t ln(T/t) + t)``."""
    return params.beta * log_integral(0.0, t, params.horizon)


@dataclass(frozen=True)
class StepFunction:
    """Left-continuous, non-negative step function.

    ``h(s) = levels[j]`` for ``s`` in ``(b_j, b_{j+1}]`` where ``b_0 = 0`` and
    ``b_1 < ... < b_m`` are the ``breakpoints``; ``h(0) = levels[0]``.
    """

    breakpoints: tuple = ()
    levels: tuple = (0.0,)

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        lv = tuple(float(v) for v in self.levels)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "levels", lv)
        if len(lv) != len(bp) + 1:
            raise DomainError("need exactly one more level than breakpoints")
        if any(b <= 0 for b in bp) or any(b2 <= b1 for b1, b2 in zip(bp, bp[1:])):
            raise DomainError("breakpoints must be positive and strictly increasing")
        if any(not (v >= 0 and math.isfinite(v)) for v in lv):
            raise DomainError("levels must be finite and non-negative")

    @classmethod
    def constant(cls, value: float) -> "StepFunction":
        return cls((), (value,))

    def __call__(self, s):
        idx = np.searchsorted(np.asarray(self.breakpoints), s, side="left")
        out = np.asarray(self.levels)[idx]
        return float(out) if np.ndim(out) == 0 else out

    def _pieces(self, a: float, b: float):
        edges = [0.0, *self.breakpoints, math.inf]
        for lo, hi, lvl in zip(edges, edges[1:], self.levels):
            lo, hi = max(lo, a), min(hi, b)
            if hi > lo:
                yield lo, hi, lvl

    def integral(self, a: float, b: float, power: int = 1) -> float:
        return sum(lvl**power * (hi - lo) for lo, hi, lvl in self._pieces(a, b))

    def log_weighted_integral(self, horizon: float) -> float:
        """``int_0^T ln(T/s) h(s) ds``, exact for step ``h``."""
        return float(sum(lvl * log_integral(lo, hi, horizon) for lo, hi, lvl in self._pieces(0.0, horizon)))

    def squared_tail(self, nodes) -> np.ndarray:
        """``int_{t_k}^T h^2`` for every node."""
        horizon = nodes[-1]
        return np.array([self.integral(t, horizon, 2) for t in nodes])

    def cell_averages(self, nodes) -> np.ndarray:
        nodes = np.asarray(nodes, dtype=float)
        if not self.breakpoints:
            return np.full(len(nodes) - 1, self.levels[0])
        cum = np.array([self.integral(0.0, t) for t in nodes])
        return np.diff(cum) / np.diff(nodes)

    def to_dict(self) -> dict:
        return {"breakpoints": list(self.breakpoints), "levels": list(self.levels)}


class Payoff:
    """Base class; subclasses fill in the closed forms."""

    kind: ClassVar[str] = ""
    supports_q: ClassVar[bool] = True

    # -- physical measure -------------------------------------------------
    def mean_p(self, horizon: float) -> float:
        raise NotImplementedError

    def conditional_mean_p(self, path: BrownianPath) -> np.ndarray:
        raise NotImplementedError

    def density_p(self, path: BrownianPath) -> np.ndarray:
        raise NotImplementedError

    def density_p_at(self, path: BrownianPath, k: int) -> np.ndarray:
        """Density at node ``k`` as a function of time (left-continuous form)."""
        return self.density_p(path)[..., k]

    def terminal(self, path: BrownianPath) -> np.ndarray:
        return self.conditional_mean_p(path)[..., -1]

    # -- shifted measure ---------------------------------------------------
    def _require_q(self):
        if not self.supports_q:
            raise UnsupportedPayoffError(f"{self.kind} has no closed form under the shifted measure")

    def mean_q(self, params: ModelParams) -> float:
        raise NotImplementedError

    def conditional_mean_q(self, path: BrownianPath, params: ModelParams) -> np.ndarray:
        raise NotImplementedError

    def density_q(self, path: BrownianPath, params: ModelParams) -> np.ndarray:
        raise NotImplementedError

    def density_q_at(self, path: BrownianPath, params: ModelParams, k: int) -> np.ndarray:
        return self.density_q(path, params)[..., k]

    def density_q_trapezoid(self, path: BrownianPath, params: ModelParams) -> np.ndarray:
        """Cell means of ``Z`` for the running integral ``int_0^t Z ds``."""
        return self.density_q(path, params)

    def essential_infimum(self) -> float:
        raise NotImplementedError

    # -- serialization -----------------------------------------------------
    def to_dict(self) -> dict:
        raise NotImplementedError

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass(frozen=True)
class Constant(Payoff):
    value: float = 0.0
    kind: ClassVar[str] = "constant"

    def mean_p(self, horizon):
        return float(self.value)

    def conditional_mean_p(self, path):
        return np.full(path.w.shape, float(self.value))

    def density_p(self, path):
        return np.zeros(path.increments.shape)

    def mean_q(self, params):
        return float(self.value)

    def conditional_mean_q(self, path, params):
        return self.conditional_mean_p(path)

    def density_q(self, path, params):
        return self.density_p(path)

    def essential_infimum(self):
        return float(self.value)

    def to_dict(self):
        return {"kind": self.kind, "value": self.value}


@dataclass(frozen=True)
class LinearBM(Payoff):
    """``xi = W(T)``."""

    kind: ClassVar[str] = "linear_bm"

    def mean_p(self, horizon):
        return 0.0

    def conditional_mean_p(self, path):
        return path.w.copy()

    def density_p(self, path):
        return np.ones(path.increments.shape)

    def mean_q(self, params):
        return -params.beta * params.horizon

    def conditional_mean_q(self, path, params):
        return path.w - params.beta * params.horizon

    def density_q(self, path, params):
        return np.ones(path.increments.shape)

    def essential_infimum(self):
        return -math.inf

    def to_dict(self):
        return {"kind": self.kind}


@dataclass(frozen=True)
class ExpBM(Payoff):
    """``xi = exp(a W(T) - drift * T)``; ``a = drift = 2`` gives ``exp(2W(T) - 2T)``."""

    a: float = 1.0
    drift: float = 0.0
    kind: ClassVar[str] = "exp_bm"

    @classmethod
    def martingale(cls, a: float = 2.0) -> "ExpBM":
        """The mean-one member ``exp(a W(T) - a^2 T / 2)``."""
        return cls(a, 0.5 * a * a)

    def mean_p(self, horizon):
        return math.exp((0.5 * self.a**2 - self.drift) * horizon)

    def conditional_mean_p(self, path):
        T = path.grid.horizon
        tail = 0.5 * self.a**2 * (T - path.grid.nodes)
        return np.exp(self.a * path.w + tail - self.drift * T)

    def density_p(self, path):
        return self.a * self.conditional_mean_p(path)[..., :-1]

    def mean_q(self, params):
        T = params.horizon
        return math.exp((0.5 * self.a**2 - self.drift) * T - self.a * params.beta * T)

    def conditional_mean_q(self, path, params):
        T = params.horizon
        tail = 0.5 * self.a**2 * (T - path.grid.nodes)
        return np.exp(self.a * path.w + tail - self.drift * T - self.a * params.beta * T)

    def density_q(self, path, params):
        return self.a * self.conditional_mean_q(path, params)[..., :-1]

    def density_q_trapezoid(self, path, params):
        v = self.conditional_mean_q(path, params)
        return 0.5 * self.a * (v[..., 1:] + v[..., :-1])

    def essential_infimum(self):
        return 0.0 if self.a != 0 else math.exp(-self.drift)

    def to_dict(self):
        return {"kind": self.kind, "a": self.a, "drift": self.drift}


@dataclass(frozen=True)
class ExpIntegral(Payoff):
    """``xi = exp(int_0^T h dW)`` for a non-negative step function ``h``."""

    h: StepFunction = field(default_factory=lambda: StepFunction.constant(1.0))
    kind: ClassVar[str] = "exp_integral"

    def _stoch_integral(self, path):
        hbar = self.h.cell_averages(path.grid.nodes)
        out = np.zeros(path.w.shape)
        np.cumsum(hbar * path.increments, axis=-1, out=out[..., 1:])
        return out, hbar

    def mean_p(self, horizon):
        return math.exp(0.5 * self.h.integral(0.0, horizon, 2))

    def conditional_mean_p(self, path):
        running, _ = self._stoch_integral(path)
        return np.exp(running + 0.5 * self.h.squared_tail(path.grid.nodes))

    def density_p(self, path):
        hbar = self.h.cell_averages(path.grid.nodes)
        return hbar * self.conditional_mean_p(path)[..., :-1]

    def density_p_at(self, path, k):
        t = path.grid.nodes[k]
        return self.h(t) * self.conditional_mean_p(path)[..., k]

    def _log_penalty(self, params):
        return params.beta * self.h.log_weighted_integral(params.horizon)

    def mean_q(self, params):
        return math.exp(0.5 * self.h.integral(0.0, params.horizon, 2) - self._log_penalty(params))

    def conditional_mean_q(self, path, params):
        return self.conditional_mean_p(path) * math.exp(-self._log_penalty(params))

    def density_q(self, path, params):
        hbar = self.h.cell_averages(path.grid.nodes)
        return hbar * self.conditional_mean_q(path, params)[..., :-1]

    def density_q_at(self, path, params, k):
        t = path.grid.nodes[k]
        return self.h(t) * self.conditional_mean_q(path, params)[..., k]

    def density_q_trapezoid(self, path, params):
        hbar = self.h.cell_averages(path.grid.nodes)
        v = self.conditional_mean_q(path, params)
        return 0.5 * hbar * (v[..., 1:] + v[..., :-1])

    def essential_infimum(self):
        return 1.0 if all(v == 0 for v in self.h.levels) else 0.0

    def to_dict(self):
        return {"kind": self.kind, **self.h.to_dict()}


@dataclass(frozen=True)
class IndicatorBM(Payoff):
    """``xi = 1{W(t0) > 0}``; only available under the physical measure."""

    t0: float = 1.0
    kind: ClassVar[str] = "indicator_bm"
    supports_q: ClassVar[bool] = False

    def __post_init__(self):
        if not self.t0 > 0:
            raise DomainError("t0 must be positive")

    def _check(self, path):
        if self.t0 > path.grid.horizon * (1 + 1e-12):
            raise DomainError("t0 must not exceed the horizon")
        return path.grid.index_of(self.t0)

    def mean_p(self, horizon):
        if self.t0 > horizon:
            raise DomainError("t0 must not exceed the horizon")
        return 0.5

    def conditional_mean_p(self, path):
        k0 = self._check(path)
        nodes = path.grid.nodes
        out = np.empty(path.w.shape)
        lag = np.sqrt(self.t0 - nodes[:k0])
        out[..., :k0] = ndtr(path.w[..., :k0] / lag)
        out[..., k0:] = (path.w[..., k0] > 0).astype(float)[..., None]
        return out

    def density_p(self, path):
        # zero from t0 on: the payoff is already known there
        k0 = self._check(path)
        nodes = path.grid.nodes
        out = np.zeros(path.increments.shape)
        lag = np.sqrt(self.t0 - nodes[:k0])
        x = path.w[..., :k0] / lag
        out[..., :k0] = np.exp(-0.5 * x * x) / (_SQRT_2PI * lag)
        return out

    def density_p_at(self, path, k):
        if k == self._check(path):
            raise DomainError("the density of 1{W(t0) > 0} is undefined at t0")
        return self.density_p(path)[..., k]

    def mean_q(self, params):
        self._require_q()

    def conditional_mean_q(self, path, params):
        self._require_q()

    def density_q(self, path, params):
        self._require_q()

    def essential_infimum(self):
        return 0.0

    def to_dict(self):
        return {"kind": self.kind, "t0": self.t0}


_KINDS = {cls.kind: cls for cls in (Constant, LinearBM, ExpBM, ExpIntegral, IndicatorBM)}


def payoff_from_dict(d: dict) -> Payoff:
    """Inverse of ``Payoff.to_dict``."""
    d = dict(d)
    kind = d.pop("kind", None)
    if kind not in _KINDS:
        raise DomainError(f"unknown payoff kind {kind!r}; expected one of {sorted(_KINDS)}")
    if kind == "exp_integral":
        return ExpIntegral(StepFunction(tuple(d.get("breakpoints", ())), tuple(d.get("levels", (1.0,)))))
    return _KINDS[kind](**d)


def payoff_from_json(text: str) -> Payoff:
    return payoff_from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# scalar-in-time accessors
# ---------------------------------------------------------------------------


def mean_p(payoff: Payoff, params: ModelParams) -> float:
    """``E[xi]`` under the physical measure."""
    return payoff.mean_p(params.horizon)


def conditional_mean_p(payoff: Payoff, path: BrownianPath, t: float):
    """``V(t) = E[xi | F_t]`` along ``path``."""
    return payoff.conditional_mean_p(path)[..., path.grid.index_of(t)]


def _check_before_terminal(path, t):
    k = path.grid.index_of(t)
    if k == path.grid.steps:
        raise DomainError("the representation density is defined for t < T")
    return k


def martingale_density_p(payoff: Payoff, path: BrownianPath, t: float):
    """Integrand ``M(t)`` in ``xi = E[xi] + int M dW``."""
    return payoff.density_p_at(path, _check_before_terminal(path, t))


def conditional_mean_q(payoff: Payoff, path_tilde: BrownianPath, t: float, params: ModelParams):
    """``E^Q~[xi | F_t]`` along a path of the ``Q~``-Brownian motion."""
    payoff._require_q()
    return payoff.conditional_mean_q(path_tilde, params)[..., path_tilde.grid.index_of(t)]


def martingale_density_q(payoff: Payoff, path_tilde: BrownianPath, t: float, params: ModelParams):
    """Integrand ``Z(t)`` in ``xi = E^Q~[xi] + int Z dW~``."""
    payoff._require_q()
    return payoff.density_q_at(path_tilde, params, _check_before_terminal(path_tilde, t))


def radon_nikodym(path: BrownianPath, params: ModelParams):
    r"""Density :math:`N^\beta(T) = d\tilde Q / dP` along a ``P``-path.

    The stochastic integral uses the cell averages of ``ln(T/s)`` (exact via
    the antiderivative, so the first cell needs no special casing); the
    quadratic-variation term uses ``int_0^T ln^2(T/s) ds = 2T``.
    """
    if params.beta == 0:
        return np.ones(path.w.shape[:-1]) if path.w.ndim > 1 else 1.0
    nodes = path.grid.nodes
    weights = log_integral(nodes[:-1], nodes[1:], params.horizon) / path.grid.dt
    stoch = np.sum(weights * path.increments, axis=-1)
    out = np.exp(-params.beta * stoch - params.beta**2 * params.horizon)
    return float(out) if np.ndim(out) == 0 else out
