"""Seeded Brownian paths and Monte Carlo statistics.

Random numbers come from numpy's Philox-4x64-10 counter-based generator.
Path ``p`` under seed ``s`` uses its own key ``(s, p)`` with the counter
starting at zero, so a path's increments depend only on ``(seed, p, steps)``
and never on batching, ordering or worker count. Each raw 64-bit word ``x``
becomes the uniform ``((x >> 11) + 0.5) / 2**53`` in the open unit interval
and is mapped to a normal variate by the inverse CDF.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Iterable, Iterator

import numpy as np
from numpy.random import Philox
from scipy.special import ndtri

from .errors import DomainError
from .paths import BrownianPath, TimeGrid

__all__ = [
    "SimConfig",
    "MCEstimate",
    "ProbabilityEstimate",
    "RunningStats",
    "normals",
    "simulate_paths",
    "estimate",
    "probability_below",
    "refinement_rates",
]

RNG_NAME = "philox4x64-10/key=(seed,path)/inverse-cdf"
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SimConfig:
    n_paths: int = 100_000
    grid_steps: int = 512
    seed: int = 0
    horizon: float = 1.0

    def __post_init__(self):
        if self.n_paths < 1:
            raise DomainError("n_paths must be positive")
        if self.grid_steps < 2:
            raise DomainError("grid_steps must be at least 2")
        if not 0 <= self.seed <= _MASK64:
            raise DomainError("seed must be an unsigned 64-bit integer")
        if not self.horizon > 0:
            raise DomainError("horizon must be positive")

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(self.horizon, self.grid_steps)


def normals(seed: int, start: int, stop: int, steps: int) -> np.ndarray:
    """Standard normals for paths ``start .. stop-1``, shape ``(stop - start, steps)``."""
    out = np.empty((stop - start, steps))
    for row, p in enumerate(range(start, stop)):
        raw = Philox(key=[seed, p]).random_raw(steps)
        out[row] = ((raw >> np.uint64(11)).astype(float) + 0.5) * 2.0**-53
    return ndtri(out)


def simulate_paths(config: SimConfig, batch_size: int = 4096) -> Iterator[BrownianPath]:
    """Yield the configured paths in batches, in path-index order."""
    grid = config.grid
    scale = math.sqrt(grid.dt)
    for start in range(0, config.n_paths, batch_size):
        stop = min(start + batch_size, config.n_paths)
        dw = scale * normals(config.seed, start, stop, config.grid_steps)
        yield BrownianPath.from_increments(grid, dw)


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    stderr: float
    n: int

    def within(self, target: float, n_stderr: float = 3.0) -> bool:
        return abs(self.mean - target) <= n_stderr * self.stderr


@dataclass(frozen=True)
class ProbabilityEstimate(MCEstimate):
    lower: float = 0.0
    upper: float = 1.0
    confidence: float = 0.99


@dataclass
class RunningStats:
    """Mean and variance accumulated batch by batch (Chan et al. merge)."""

    n: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def update(self, values) -> "RunningStats":
        x = np.asarray(values, dtype=float).ravel()
        if x.size == 0:
            return self
        if np.isnan(x).any():
            raise DomainError("NaN in Monte Carlo sample")
        nb = x.size
        mb = float(x.mean())
        m2b = float(((x - mb) ** 2).sum())
        n = self.n + nb
        delta = mb - self.mean
        self.mean += delta * nb / n
        self.m2 += m2b + delta * delta * self.n * nb / n
        self.n = n
        return self

    def result(self) -> MCEstimate:
        if self.n < 2:
            raise DomainError("need at least two samples")
        var = self.m2 / (self.n - 1)
        return MCEstimate(self.mean, math.sqrt(var / self.n), self.n)


def estimate(values: Iterable) -> MCEstimate:
    """Mean and standard error of a finite sample (arrays or a stream of arrays)."""
    stats = RunningStats()
    if isinstance(values, np.ndarray):
        stats.update(values)
    else:
        for chunk in values:
            stats.update(chunk)
    return stats.result()


def _wilson(k: int, n: int, z: float) -> tuple[float, float]:
    p = k / n
    denom = 1.0 + z * z / n
    centre = p + z * z / (2 * n)
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    return max(0.0, (centre - half) / denom), min(1.0, (centre + half) / denom)


def probability_below(values, threshold: float = 0.0, confidence: float = 0.99) -> ProbabilityEstimate:
    """Estimate ``P(value < threshold)``.

    ``stderr`` is the binomial one; ``lower``/``upper`` are one-sided Wilson
    score bounds at ``confidence``.
    """
    x = np.concatenate([np.ravel(np.asarray(v, dtype=float)) for v in _chunks(values)])
    if x.size < 2:
        raise DomainError("need at least two samples")
    if np.isnan(x).any():
        raise DomainError("NaN in Monte Carlo sample")
    n = x.size
    k = int(np.count_nonzero(x < threshold))
    p = k / n
    z = NormalDist().inv_cdf(confidence)
    lo, hi = _wilson(k, n, z)
    return ProbabilityEstimate(p, math.sqrt(p * (1 - p) / n), n, lo, hi, confidence)


def _chunks(values):
    if isinstance(values, np.ndarray):
        return [values]
    return list(values)


def refinement_rates(errors) -> list[float]:
    """``log2(e(n) / e(2n))`` for consecutive entries of a doubling study."""
    e = np.asarray(errors, dtype=float)
    return [float(v) for v in np.log2(e[:-1] / e[1:])]
