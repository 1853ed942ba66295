"""Exact periodic solves of ``(a I - eps^2 Delta_h) u = rhs``.

The 5-point Laplacian is diagonal in the discrete Fourier basis, so a
solve is one forward real FFT, a pointwise division by the real symbol
and one inverse FFT.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.fft

from .grid import GridSpec, laplacian


@lru_cache(maxsize=32)
def _rfft_eigenvalues(L: float, M: int) -> np.ndarray:
    # eigenvalues on the rfft2 half-plane (M, M//2 + 1)
    h = L / M
    sy = np.sin(np.pi * np.arange(M) / M) ** 2
    sx = np.sin(np.pi * np.arange(M // 2 + 1) / M) ** 2
    lam = -(4.0 / h**2) * (sy[:, None] + sx[None, :])
    lam.setflags(write=False)
    return lam


@dataclass(frozen=True)
class HelmholtzOperator:
    spec: GridSpec
    a: float
    eps2: float
    symbol: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"Helmholtz shift a must be positive, got {self.a}")
        if self.eps2 < 0:
            raise ValueError(f"eps2 must be non-negative, got {self.eps2}")
        lam = _rfft_eigenvalues(float(self.spec.L), int(self.spec.M))
        object.__setattr__(self, "symbol", self.a - self.eps2 * lam)

    def apply(self, u: np.ndarray) -> np.ndarray:
        return self.a * u - self.eps2 * laplacian(self.spec, u)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = self.spec.check(rhs)
        coeffs = scipy.fft.rfft2(rhs)
        coeffs /= self.symbol
        return scipy.fft.irfft2(coeffs, s=rhs.shape)


def solve(spec: GridSpec, a: float, eps2: float, rhs: np.ndarray) -> np.ndarray:
    return HelmholtzOperator(spec, a, eps2).solve(rhs)
