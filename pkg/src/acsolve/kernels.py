"""Variable-step BDF2 convolution kernels and the step-ratio bookkeeping around them.

With ``r_n = tau_n / tau_{n-1}`` the BDF2 difference is

    D2 w^n = b0 (w^n - w^{n-1}) + b1 (w^{n-1} - w^{n-2}),
    b0 = (1 + 2 r_n) / (tau_n (1 + r_n)),  b1 = -r_n^2 / (tau_n (1 + r_n)),

and the first level uses backward Euler (``b0 = 1/tau_1``, ``b1 = 0``).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .potential import ConfigError

log = logging.getLogger(__name__)

ENERGY_RATIO_LIMIT = 4.864
MBP_RATIO_LIMIT = 1.0 + math.sqrt(2.0)
POLICY_MODES = ("energy", "mbp", "permissive")


class RatioViolationError(ValueError):
    def __init__(self, ratio: float, bound: float, which: str, n: int):
        self.ratio = ratio
        self.bound = bound
        self.which = which
        self.n = n
        super().__init__(
            f"step {n}: ratio r = {ratio:.6g} violates the {which} bound r < {bound:.6g}"
        )


class EtaWindowError(ValueError):
    pass


@dataclass(frozen=True)
class RatioPolicy:
    mode: str = "energy"
    delta: float = 0.001
    r_max_mbp: float = MBP_RATIO_LIMIT

    def __post_init__(self):
        if self.mode not in POLICY_MODES:
            raise ConfigError(f"ratio_policy: unknown mode {self.mode!r}, expected one of {POLICY_MODES}")
        if not 0 < self.delta < ENERGY_RATIO_LIMIT:
            raise ConfigError(f"delta: must lie in (0, {ENERGY_RATIO_LIMIT}), got {self.delta}")
        if not 0 < self.r_max_mbp <= self.r_max_energy:
            raise ConfigError(f"r_max_mbp: must lie in (0, {self.r_max_energy}], got {self.r_max_mbp}")

    @property
    def r_max_energy(self) -> float:
        return ENERGY_RATIO_LIMIT - self.delta

    def check(self, n: int, r: float) -> None:
        if n < 2:
            return
        if r >= self.r_max_energy:
            err = RatioViolationError(r, self.r_max_energy, "energy", n)
        elif r >= self.r_max_mbp and self.mode != "energy":
            err = RatioViolationError(r, self.r_max_mbp, "MBP", n)
        else:
            return
        if self.mode == "permissive":
            log.warning("%s (permissive mode, continuing)", err)
            return
        raise err


@dataclass(frozen=True)
class BdfStep:
    n: int
    tau: float
    r: float
    b0: float
    b1: float


def make_step(n: int, tau_n: float, tau_prev: float | None, policy: RatioPolicy | None = None) -> BdfStep:
    if not tau_n > 0:
        raise ValueError(f"step {n}: tau must be positive, got {tau_n}")
    if n == 1:
        return BdfStep(1, tau_n, 0.0, 1.0 / tau_n, 0.0)
    if tau_prev is None or not tau_prev > 0:
        raise ValueError(f"step {n}: previous tau must be positive, got {tau_prev}")
    r = tau_n / tau_prev
    if policy is not None:
        policy.check(n, r)
    b0 = (1.0 + 2.0 * r) / (tau_n * (1.0 + r))
    b1 = -(r * r) / (tau_n * (1.0 + r))
    return BdfStep(n, tau_n, r, b0, b1)


def bdf_difference(step: BdfStep, w_curr, w_prev, w_prev2=None):
    """Apply ``D2`` (``D1`` on the first level) to three consecutive values."""
    out = step.b0 * (w_curr - w_prev)
    if step.n >= 2:
        out = out + step.b1 * (w_prev - w_prev2)
    return out


def g_coefficient(r_next: float, r_max: float, tau_n: float) -> float:
    """Pointwise factor ``c`` with ``G[w] = c * w^2``."""
    return r_next * math.sqrt(r_max) / (2.0 * (1.0 + r_next) * tau_n)


def eta_star(r_max: float) -> float:
    return 2.0 * r_max**2 / (1.0 + r_max) ** 2


def eta_lower_bound(r: float) -> float:
    """``-b1/b0``; the recombination parameter must exceed this."""
    return r * r / (1.0 + 2.0 * r)


def recombined_kernels(step: BdfStep, eta: float) -> np.ndarray:
    """Kernels ``d_0..d_n`` of the recombined BDF2 operator for ``psi^k = phi^k - eta phi^{k-1}``."""
    lower = eta_lower_bound(step.r) if step.n >= 2 else 0.0
    if not lower < eta < 1.0:
        raise EtaWindowError(f"eta = {eta} outside ({lower:.6g}, 1) for step {step.n} with r = {step.r:.6g}")
    d = np.empty(step.n + 1)
    d[0] = step.b0
    if step.n == 1:
        d[1] = eta * step.b0
    else:
        d[1:] = (step.b0 * eta + step.b1) * eta ** np.arange(step.n)
    return d


def k_factor(s: float, eta: float) -> float:
    return (1.0 - eta) / eta**2 * ((1.0 + 2.0 * s) * eta - s * s) / (1.0 + s)


def mbp_tau_bound(kappa: float, eps2: float, h: float, r_max: float) -> float:
    """Practical stepsize bound ``K(r_max) / (kappa + 4 eps^2 / h^2)`` with ``eta = eta*``."""
    if not r_max < MBP_RATIO_LIMIT:
        raise ValueError(f"r_max must be below 1 + sqrt(2), got {r_max}")
    return k_factor(r_max, eta_star(r_max)) / (kappa + 4.0 * eps2 / h**2)


def mbp_tau_bound_step(kappa: float, eps2: float, h: float, r_n: float, eta: float) -> float:
    """Per-step bound for a given ratio and recombination parameter."""
    return k_factor(r_n, eta) / (kappa + 4.0 * eps2 / h**2)
