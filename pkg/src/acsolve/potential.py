"""Nonlinear potentials ``F``, reactions ``f = -F'`` and the maximum bound ``beta``."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect

from .grid import GridSpec

KINDS = ("double-well", "flory-huggins", "zero")


class ConfigError(ValueError):
    pass


class PotentialDomainError(ValueError):
    """A logarithmic potential was evaluated at ``|x| >= 1``.

    Upstream this means the maximum bound was breached.
    """

    def __init__(self, value: float, message: str | None = None):
        self.value = float(value)
        super().__init__(message or f"Flory-Huggins potential evaluated at |x| = {abs(self.value):.17g} >= 1")


@dataclass(frozen=True)
class Potential:
    """Bulk potential selected by ``kind``.

    ``"zero"`` (F = f = 0) turns the model into the heat equation and is
    only meant for verification runs.
    """

    kind: str = "double-well"
    theta: float = 0.8
    theta_c: float = 1.6
    beta: float = field(init=False)
    kappa_default: float = field(init=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"potential: unknown kind {self.kind!r}, expected one of {KINDS}")
        if self.kind == "flory-huggins" and not (self.theta_c > self.theta > 0):
            raise ConfigError(
                f"potential: Flory-Huggins needs theta_c > theta > 0, got theta={self.theta}, theta_c={self.theta_c}"
            )
        beta = compute_beta(self)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "kappa_default", _kappa_default(self, beta))

    @classmethod
    def double_well(cls) -> "Potential":
        return cls("double-well")

    @classmethod
    def flory_huggins(cls, theta: float = 0.8, theta_c: float = 1.6) -> "Potential":
        return cls("flory-huggins", theta, theta_c)

    def _check_domain(self, x):
        if self.kind != "flory-huggins":
            return
        ax = np.abs(x)
        worst = np.max(ax) if np.ndim(ax) else ax
        if not worst < 1.0:
            raise PotentialDomainError(worst)

    def F(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "double-well":
            return 0.25 * (x * x - 1.0) ** 2
        if self.kind == "zero":
            return np.zeros_like(x)
        self._check_domain(x)
        mix = (1.0 + x) * np.log1p(x) + (1.0 - x) * np.log1p(-x)
        return 0.5 * self.theta * mix - 0.5 * self.theta_c * x * x

    def f(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "double-well":
            return x - x**3
        if self.kind == "zero":
            return np.zeros_like(x)
        self._check_domain(x)
        return 0.5 * self.theta * (np.log1p(-x) - np.log1p(x)) + self.theta_c * x

    def f_prime(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "double-well":
            return 1.0 - 3.0 * x * x
        if self.kind == "zero":
            return np.zeros_like(x)
        self._check_domain(x)
        return -self.theta / (1.0 - x * x) + self.theta_c

    def e1h(self, spec: GridSpec, u: np.ndarray) -> float:
        """Discrete bulk energy ``h^2 * sum F(u)``."""
        u = spec.check(u)
        return float(spec.h**2 * np.sum(self.F(u)))


def compute_beta(p: Potential) -> float:
    """Positive root of ``f`` bounding the dynamics."""
    if p.kind in ("double-well", "zero"):
        return 1.0
    fscalar = lambda x: float(p.f(x))  # noqa: E731
    lo, hi = 1e-8, 1.0 - 1e-15
    if not (fscalar(lo) > 0 > fscalar(hi)):
        raise ConfigError("potential: no sign change of f on (0, 1); cannot determine beta")
    beta = float(bisect(fscalar, lo, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=200))
    # land on the side where f(beta) <= 0 so [-beta, beta] is invariant
    while fscalar(beta) > 0:
        beta = float(np.nextafter(beta, 1.0))
    return beta


def _kappa_default(p: Potential, beta: float) -> float:
    samples = np.linspace(-beta, beta, 10_001)
    dense = float(np.max(np.abs(p.f_prime(samples))))
    knots = max(abs(float(p.f_prime(x))) for x in (-beta, 0.0, beta))
    return max(dense, knots)

