"""Time-step sequences: uniform, random-ratio and the energy-adaptive controller."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .potential import ConfigError

# name recorded in run metadata for reproducibility
PRNG_ALGORITHM = "numpy.random.Generator(PCG64)"


@dataclass(frozen=True)
class TimeGrid:
    taus: np.ndarray
    T: float
    r_max_used: float

    @property
    def N(self) -> int:
        return len(self.taus)

    @property
    def ratios(self) -> np.ndarray:
        return self.taus[1:] / self.taus[:-1]

    @property
    def times(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.taus)])


def uniform(T: float, N: int) -> TimeGrid:
    if not (T > 0 and N >= 1):
        raise ValueError(f"uniform grid needs T > 0 and N >= 1, got T={T}, N={N}")
    return TimeGrid(np.full(N, T / N), T, 1.0)


def _open_uniform(rng: np.random.Generator, lo: float, hi: float, size: int) -> np.ndarray:
    out = rng.uniform(lo, hi, size)
    bad = out <= lo
    while bad.any():
        out[bad] = rng.uniform(lo, hi, int(bad.sum()))
        bad = out <= lo
    return out


def random_ratio(T: float, N: int, r_max: float, seed: int) -> TimeGrid:
    """Steps proportional to ``theta_k ~ U(1/r_max, 1)``, so every ratio is below ``r_max``."""
    if not r_max > 1:
        raise ValueError(f"r_max must exceed 1, got {r_max}")
    rng = np.random.default_rng(seed)
    theta = _open_uniform(rng, 1.0 / r_max, 1.0, N)
    taus = T * theta / theta.sum()
    return TimeGrid(taus, T, r_max)


def shrink_first_step(grid: TimeGrid, ratio: float = 2.0, r_max: float | None = None) -> TimeGrid:
    """Split the first step into a geometric ramp starting at ``tau^(4/3)``.

    ``tau`` is the largest step. The ramp grows by ``ratio``; every ratio of
    the result must stay below ``r_max`` (default ``max(r_max_used, ratio)``
    with a little headroom).
    """
    limit = max(grid.r_max_used, ratio * (1 + 1e-9)) if r_max is None else r_max
    taus = grid.taus
    target = float(taus.max()) ** (4.0 / 3.0)
    first = float(taus[0])
    if first <= target:
        return grid
    m = 1
    while True:
        m += 1
        c = first * (ratio - 1.0) / (ratio**m - 1.0)
        if c <= target:
            break
    ramp = c * ratio ** np.arange(m)
    ramp[-1] = first - ramp[:-1].sum()
    new = np.concatenate([ramp, taus[1:]])
    r = new[1:] / new[:-1]
    if len(r) and r.max() >= limit:
        raise ConfigError(f"shrink_first_step: ramp ratio {r.max():.4g} is not below r_max = {limit}")
    used = max(grid.r_max_used, float(np.nextafter(r.max(), np.inf)) if len(r) else 1.0)
    return TimeGrid(new, grid.T, used)


@dataclass(frozen=True)
class AdaptiveParams:
    tau_min: float = 0.04
    tau_max: float = 0.4
    alpha: float = 1e8
    r_max: float = 2.4

    def __post_init__(self):
        if not 0 < self.tau_min <= self.tau_max:
            raise ConfigError(f"tau_min/tau_max: need 0 < tau_min <= tau_max, got {self.tau_min}, {self.tau_max}")
        if self.alpha < 0:
            raise ConfigError(f"alpha: must be non-negative, got {self.alpha}")
        if not self.r_max > 1:
            raise ConfigError(f"r_max: must exceed 1, got {self.r_max}")


def adaptive_next(params: AdaptiveParams, tau_n: float, E_n: float, E_prev: float) -> float:
    """Next step from the backward difference quotient of the energy."""
    slope = (E_n - E_prev) / tau_n
    proposal = params.tau_max / math.sqrt(1.0 + params.alpha * slope * slope)
    return min(max(params.tau_min, proposal), params.r_max * tau_n)
