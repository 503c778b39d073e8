"""Independent reference solutions used to cross-check the closed forms."""

from __future__ import annotations

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import DomainError

__all__ = ["picard_solve"]


def picard_solve(y0: float, f, nodes, beta: float, tol: float = 1e-14, max_iter: int = 500) -> np.ndarray:
    """Fixed-point iteration for ``y(t) = y0 + int_0^t (beta/s) int_0^s y du ds + f(t)``.

    Both integrals are cumulative trapezoid sums on ``nodes``; the running
    mean ``(1/s) int_0^s y`` is taken as ``y(0)`` at ``s = 0``.
    """
    f = np.asarray(f, dtype=float)
    nodes = np.asarray(nodes, dtype=float)
    y = y0 + f
    for _ in range(max_iter):
        inner = cumulative_trapezoid(y, nodes, initial=0.0)
        mean = np.empty_like(y)
        mean[0] = y[0]
        mean[1:] = inner[1:] / nodes[1:]
        new = y0 + f + beta * cumulative_trapezoid(mean, nodes, initial=0.0)
        if np.max(np.abs(new - y)) <= tol * max(1.0, np.max(np.abs(new))):
            return new
        y = new
    raise DomainError("Picard iteration did not converge")
