"""Uniform time grids and (batches of) sampled Brownian paths."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = ["TimeGrid", "BrownianPath"]


@dataclass(frozen=True)
class TimeGrid:
    """``steps + 1`` equally spaced nodes from 0 to ``horizon``."""

    horizon: float
    steps: int

    def __post_init__(self):
        if self.steps < 2:
            raise DomainError("a grid needs at least 2 steps")
        if not self.horizon > 0:
            raise DomainError("horizon must be positive")

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.steps + 1)

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    def index_of(self, t: float) -> int:
        """Index of the node equal to ``t`` (to rounding); off-grid times raise."""
        if t < 0 or t > self.horizon * (1 + 1e-12):
            raise DomainError(f"t={t} outside [0, {self.horizon}]")
        k = int(round(t / self.dt))
        if abs(k * self.dt - t) > 1e-9 * max(1.0, self.horizon):
            raise DomainError(f"t={t} is not a grid node (dt={self.dt})")
        return k

    def refine(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.horizon, self.steps * factor)


@dataclass(frozen=True)
class BrownianPath:
    """Brownian values ``w[..., k] = W(nodes[k])`` with ``w[..., 0] = 0``.

    A leading batch axis is allowed; every solver broadcasts over it.
    """

    grid: TimeGrid
    w: np.ndarray

    def __post_init__(self):
        if self.w.shape[-1] != self.grid.steps + 1:
            raise DomainError("path length does not match the grid")

    @classmethod
    def from_increments(cls, grid: TimeGrid, dw) -> "BrownianPath":
        dw = np.asarray(dw, dtype=float)
        w = np.zeros(dw.shape[:-1] + (dw.shape[-1] + 1,))
        np.cumsum(dw, axis=-1, out=w[..., 1:])
        return cls(grid, w)

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.w, axis=-1)

    @property
    def n_paths(self) -> int:
        return int(np.prod(self.w.shape[:-1], dtype=int))

    def terminal(self) -> np.ndarray:
        return self.w[..., -1]

    def at(self, t: float) -> np.ndarray:
        return self.w[..., self.grid.index_of(t)]

    def coarsen(self, factor: int) -> "BrownianPath":
        """Same trajectory sampled on every ``factor``-th node."""
        if self.grid.steps % factor:
            raise DomainError("factor must divide the number of steps")
        return BrownianPath(TimeGrid(self.grid.horizon, self.grid.steps // factor), self.w[..., ::factor])

    def shifted(self, drift_integral) -> "BrownianPath":
        """Path ``w - drift_integral(nodes)``, e.g. to move between measures."""
        return BrownianPath(self.grid, self.w - np.asarray(drift_integral, dtype=float))
