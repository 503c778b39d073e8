r"""Modified Bessel functions :math:`I_0, I_1, K_0, K_1` on the real half-line.

Everything is evaluated through the exponentially scaled forms

.. math::
    \tilde I_\nu(w) = e^{-w} I_\nu(w), \qquad \tilde K_\nu(w) = e^{w} K_\nu(w),

which stay O(1)-ish for all arguments, so products such as
:math:`I_0(2\sqrt{\beta T}) K_1(2\sqrt{\beta s})` can be recombined without
overflow even for very large arguments.

Branches
--------
``I_nu``
    ascending power series for ``w <= 15``, Hankel asymptotic expansion above.
``K_nu``
    ascending series with the logarithmic term for ``w <= 2``, Steed's
    continued fraction (Temme's CF2) for ``2 < w <= 25`` and the Hankel
    asymptotic expansion above 25.

All public functions accept scalars or arrays and return ``float`` for scalar
input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "BesselValue",
    "bessel_i",
    "bessel_k",
    "evaluate",
    "i0",
    "i0e",
    "i1",
    "i1e",
    "k0",
    "k0e",
    "k1",
    "k1e",
    "scaled_wk1",
    "scaled_wk1e",
    "I_SERIES_MAX",
    "K_SERIES_MAX",
    "K_ASYMPTOTIC_MIN",
]

EULER_GAMMA = 0.57721566490153286061

I_SERIES_MAX = 15.0
K_SERIES_MAX = 2.0
K_ASYMPTOTIC_MIN = 25.0

_EPS = 1e-17
_MAX_TERMS = 200


def _as_array(w):
    arr = np.asarray(w, dtype=float)
    return arr, arr.ndim == 0


def _out(arr, scalar):
    return float(arr) if scalar else arr


# ---------------------------------------------------------------------------
# branch kernels; all take 1-d float arrays inside their branch range
# ---------------------------------------------------------------------------


def _i_series(order, w):
    """Unscaled I_order(w) from the ascending series."""
    x = 0.25 * w * w
    term = np.ones_like(w) if order == 0 else 0.5 * w
    total = term.copy()
    for k in range(1, _MAX_TERMS):
        term = term * x / (k * (k + order))
        total += term
        if np.all(term <= _EPS * total):
            break
    return total


def _hankel(order, w, sign):
    r"""Sum of the Hankel series :math:`\sum (\pm 1)^k a_k(\nu) / w^k`.

    Terms are added until they drop below machine precision or start to grow
    (the series is asymptotic, not convergent).
    """
    mu = 4.0 * order * order
    term = np.ones_like(w)
    total = term.copy()
    active = np.ones(w.shape, dtype=bool)
    for k in range(1, _MAX_TERMS):
        nxt = term * (mu - (2 * k - 1) ** 2) / (8.0 * k * w) * sign
        active &= np.abs(nxt) < np.abs(term)
        total = np.where(active, total + nxt, total)
        term = nxt
        active &= np.abs(nxt) > _EPS * np.abs(total)
        if not active.any():
            break
    return total


def _ie_asymptotic(order, w):
    return _hankel(order, w, -1.0) / np.sqrt(2.0 * math.pi * w)


def _ke_asymptotic(order, w):
    return _hankel(order, w, 1.0) * np.sqrt(math.pi / (2.0 * w))


def _k_series(w):
    """Unscaled (K_0(w), w*K_1(w)) from the logarithmic series, 0 < w <= 2."""
    x = 0.25 * w * w
    log_half = np.log(0.5 * w)
    i0v = _i_series(0, w)
    i1v = _i_series(1, w)
    # K0: sum_{k>=1} x^k/(k!)^2 H_k
    term = np.ones_like(w)
    harmonic = 0.0
    s0 = np.zeros_like(w)
    # K1: sum_{k>=0} x^k/(k!(k+1)!) (psi(k+1) + psi(k+2))
    term1 = np.ones_like(w)
    s1 = term1 * (1.0 - 2.0 * EULER_GAMMA)
    for k in range(1, 60):
        harmonic += 1.0 / k
        term = term * x / (k * k)
        s0 += term * harmonic
        term1 = term1 * x / (k * (k + 1))
        s1 += term1 * (2.0 * harmonic + 1.0 / (k + 1) - 2.0 * EULER_GAMMA)
        if np.all(term <= _EPS * np.abs(s0)):
            break
    k0v = -(log_half + EULER_GAMMA) * i0v + s0
    wk1 = 1.0 + w * log_half * i1v - 0.25 * w * w * s1
    return k0v, wk1


def _ke_steed(w):
    """Scaled (K_0, K_1) via Steed's continued fraction, w > 2."""
    b = 2.0 * (1.0 + w)
    d = 1.0 / b
    h = d.copy()
    delh = d.copy()
    q1 = np.zeros_like(w)
    q2 = np.ones_like(w)
    a1 = 0.25
    q = np.full_like(w, a1)
    c = np.full_like(w, a1)
    a = -a1
    s = 1.0 + q * delh
    for i in range(2, _MAX_TERMS):
        a -= 2 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q = q + c * qnew
        b = b + 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h = h + delh
        dels = q * delh
        s = s + dels
        if np.all(np.abs(dels) < _EPS * np.abs(s)):
            break
    h = a1 * h
    k0e_v = np.sqrt(math.pi / (2.0 * w)) / s
    k1e_v = k0e_v * (w + 0.5 - h) / w
    return k0e_v, k1e_v


# ---------------------------------------------------------------------------
# scaled evaluators
# ---------------------------------------------------------------------------


def _ie(order, w):
    arr, scalar = _as_array(w)
    flat = arr.ravel()
    out = np.empty_like(flat)
    small = flat <= I_SERIES_MAX
    if small.any():
        ws = flat[small]
        out[small] = _i_series(order, ws) * np.exp(-ws)
    if (~small).any():
        out[~small] = _ie_asymptotic(order, flat[~small])
    return _out(out.reshape(arr.shape), scalar)


def _ke_pair(flat):
    """Scaled (K_0, K_1, w*K_1) on a flat array of strictly positive w."""
    k0e_v = np.empty_like(flat)
    k1e_v = np.empty_like(flat)
    wk1e_v = np.empty_like(flat)
    series = flat <= K_SERIES_MAX
    asym = flat > K_ASYMPTOTIC_MIN
    mid = ~series & ~asym
    if series.any():
        ws = flat[series]
        k0v, wk1 = _k_series(ws)
        scale = np.exp(ws)
        k0e_v[series] = k0v * scale
        wk1e_v[series] = wk1 * scale
        k1e_v[series] = wk1 * scale / ws
    if mid.any():
        ws = flat[mid]
        a, b = _ke_steed(ws)
        k0e_v[mid], k1e_v[mid], wk1e_v[mid] = a, b, b * ws
    if asym.any():
        ws = flat[asym]
        a, b = _ke_asymptotic(0, ws), _ke_asymptotic(1, ws)
        k0e_v[asym], k1e_v[asym], wk1e_v[asym] = a, b, b * ws
    return k0e_v, k1e_v, wk1e_v


def _ke(order, w):
    arr, scalar = _as_array(w)
    if np.any(arr <= 0) or np.any(np.isnan(arr)):
        raise DomainError("K_nu(w) requires w > 0")
    k0e_v, k1e_v, _ = _ke_pair(arr.ravel())
    res = k0e_v if order == 0 else k1e_v
    return _out(res.reshape(arr.shape), scalar)


def _check_nonneg(w):
    arr = np.asarray(w, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError("argument must be non-negative")


def i0e(w):
    """Exponentially scaled ``exp(-w) * I_0(w)``."""
    _check_nonneg(w)
    return _ie(0, w)


def i1e(w):
    """Exponentially scaled ``exp(-w) * I_1(w)``."""
    _check_nonneg(w)
    return _ie(1, w)


def k0e(w):
    """Exponentially scaled ``exp(w) * K_0(w)``, ``w > 0``."""
    return _ke(0, w)


def k1e(w):
    """Exponentially scaled ``exp(w) * K_1(w)``, ``w > 0``."""
    return _ke(1, w)


def i0(w):
    return bessel_i(0, w)


def i1(w):
    return bessel_i(1, w)


def k0(w):
    return bessel_k(0, w)


def k1(w):
    return bessel_k(1, w)


def _check_order(order):
    if order not in (0, 1):
        raise DomainError(f"only orders 0 and 1 are supported, got {order!r}")


def bessel_i(order, w):
    """Modified Bessel function of the first kind ``I_order(w)``, ``w >= 0``.

    Raises
    ------
    DomainError
        If ``order`` is not 0 or 1, or ``w`` is negative.
    """
    _check_order(order)
    _check_nonneg(w)
    arr, scalar = _as_array(w)
    with np.errstate(over="ignore"):
        res = np.asarray(_ie(order, arr)) * np.exp(arr)
    return _out(res, scalar)


def bessel_k(order, w):
    """Modified Bessel function of the second kind ``K_order(w)``, ``w > 0``.

    ``w = 0`` is rejected; use :func:`scaled_wk1` for the finite product
    ``w * K_1(w)`` near the origin.
    """
    _check_order(order)
    arr, scalar = _as_array(w)
    res = np.asarray(_ke(order, arr)) * np.exp(-arr)
    return _out(res, scalar)


def scaled_wk1e(w):
    """``exp(w) * w * K_1(w)``, continuously extended by 1 at ``w = 0``."""
    _check_nonneg(w)
    arr, scalar = _as_array(w)
    flat = arr.ravel()
    out = np.ones_like(flat)
    pos = flat > 0
    if pos.any():
        out[pos] = _ke_pair(flat[pos])[2]
    return _out(out.reshape(arr.shape), scalar)


def scaled_wk1(w):
    """``w * K_1(w)`` with the limit value 1 at ``w = 0``; strictly decreasing."""
    arr, scalar = _as_array(w)
    res = np.asarray(scaled_wk1e(arr)) * np.exp(-arr)
    return _out(res, scalar)


@dataclass(frozen=True)
class BesselValue:
    """The four functions evaluated at one argument."""

    w: float
    i0: float
    i1: float
    k0: float
    k1: float


def evaluate(w: float) -> BesselValue:
    """All four functions at ``w``; ``k0``/``k1`` are ``inf`` at ``w = 0``."""
    _check_nonneg(w)
    w = float(w)
    if w == 0.0:
        return BesselValue(w, 1.0, 0.0, math.inf, math.inf)
    return BesselValue(w, bessel_i(0, w), bessel_i(1, w), bessel_k(0, w), bessel_k(1, w))
