"""Auxiliary functional ``V`` and the exponential SAV ratio ``g_h``.

The Hermite cutoff is a C^1 piecewise polynomial with ``V(1) = 1``,
``V'(1) = 0`` and ``0 <= V <= 1``:

    z <= 0          0
    0 < z < 1/2     -8 z^3 + 7 z^2
    1/2 <= z <= 3/2 2 z - z^2
    3/2 < z < 2     8 z^3 - 41 z^2 + 68 z - 36
    z >= 2          0
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import GridSpec
from .potential import ConfigError, Potential

# exp(700) is close to the largest finite double
OVERFLOW_EXPONENT = 700.0


@dataclass(frozen=True)
class AuxFunctional:
    kind: str = "hermite"

    def __post_init__(self):
        if self.kind not in ("hermite", "identity"):
            raise ConfigError(f"stabilizer: unknown kind {self.kind!r}, expected 'hermite' or 'identity'")

    @property
    def lipschitz_K(self) -> float:
        return 49.0 / 24.0 if self.kind == "hermite" else 1.0

    @property
    def bounded(self) -> bool:
        """Whether ``0 <= V <= 1`` holds; false for the identity."""
        return self.kind == "hermite"

    def __call__(self, z):
        return v_eval(self, z)

    def prime(self, z):
        return v_prime(self, z)


def v_eval(a: AuxFunctional, z):
    z = np.asarray(z, dtype=float)
    if a.kind == "identity":
        return z.copy() if z.ndim else float(z)
    out = np.select(
        [z <= 0.0, z < 0.5, z <= 1.5, z < 2.0],
        [0.0, -8.0 * z**3 + 7.0 * z**2, 2.0 * z - z**2, 8.0 * z**3 - 41.0 * z**2 + 68.0 * z - 36.0],
        default=0.0,
    )
    return out if out.ndim else float(out)


def v_prime(a: AuxFunctional, z):
    z = np.asarray(z, dtype=float)
    if a.kind == "identity":
        return np.ones_like(z) if z.ndim else 1.0
    out = np.select(
        [z <= 0.0, z < 0.5, z <= 1.5, z < 2.0],
        [0.0, -24.0 * z**2 + 14.0 * z, 2.0 - 2.0 * z, 24.0 * z**2 - 82.0 * z + 68.0],
        default=0.0,
    )
    return out if out.ndim else float(out)


def g_h(p: Potential, spec: GridSpec, v: np.ndarray, w: float) -> float:
    """``exp(w) / exp(E_1h[v])`` evaluated as one exponential.

    Returns ``math.inf`` when the exponent exceeds ``OVERFLOW_EXPONENT``.
    """
    exponent = w - p.e1h(spec, v)
    if exponent > OVERFLOW_EXPONENT:
        return math.inf
    return math.exp(exponent)
