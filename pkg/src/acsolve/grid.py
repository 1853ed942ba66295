"""Periodic uniform 2D grids and the finite-difference operators on them.

Grid functions are plain ``(M, M)`` float arrays. Axis 0 is the y-index and
axis 1 the x-index, so ``u[j, i]`` is the value at ``(x_i, y_j) = (ih, jh)``
with ``i, j = 0..M-1``. Periodicity is handled with ``np.roll``; there are no
ghost layers.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


class GridMismatchError(ValueError):
    """Raised when a field does not have the shape of its grid."""


@dataclass(frozen=True)
class GridSpec:
    L: float
    M: int

    def __post_init__(self):
        if self.M < 2:
            raise ValueError(f"M must be >= 2, got {self.M}")
        if not self.L > 0:
            raise ValueError(f"L must be positive, got {self.L}")

    @property
    def h(self) -> float:
        return self.L / self.M

    @property
    def shape(self) -> tuple[int, int]:
        return (self.M, self.M)

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates ``(X, Y)`` as two ``(M, M)`` arrays."""
        x = np.arange(self.M) * self.h
        X, Y = np.meshgrid(x, x, indexing="xy")
        return X, Y

    def check(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.shape != self.shape:
            raise GridMismatchError(f"field shape {u.shape} does not match grid {self.shape}")
        return u

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)

    def full(self, value: float) -> np.ndarray:
        return np.full(self.shape, float(value))


def laplacian(spec: GridSpec, u: np.ndarray) -> np.ndarray:
    """Five-point periodic Laplacian."""
    u = spec.check(u)
    lap = (
        np.roll(u, 1, axis=0)
        + np.roll(u, -1, axis=0)
        + np.roll(u, 1, axis=1)
        + np.roll(u, -1, axis=1)
        - 4.0 * u
    )
    return lap / spec.h**2


def gradient(spec: GridSpec, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Forward-difference gradient ``(d/dx, d/dy)`` with periodic wrap."""
    u = spec.check(u)
    gx = (np.roll(u, -1, axis=1) - u) / spec.h
    gy = (np.roll(u, -1, axis=0) - u) / spec.h
    return gx, gy


def inner(spec: GridSpec, u: np.ndarray, v: np.ndarray) -> float:
    """Discrete L2 inner product ``h^2 * sum(u * v)``."""
    u = spec.check(u)
    v = spec.check(v)
    return float(spec.h**2 * np.sum(u * v))


def norm_l2(spec: GridSpec, u: np.ndarray) -> float:
    return float(np.sqrt(inner(spec, u, u)))


def norm_inf(u: np.ndarray) -> float:
    return float(np.max(np.abs(u)))


def grad_norm_sq(spec: GridSpec, u: np.ndarray) -> float:
    """``||grad_h u||^2``, the sum of both component norms."""
    gx, gy = gradient(spec, u)
    return inner(spec, gx, gx) + inner(spec, gy, gy)


def laplacian_eigenvalues(spec: GridSpec) -> np.ndarray:
    """Eigenvalues of the periodic 5-point Laplacian on the full FFT index set."""
    p = np.arange(spec.M)
    s = np.sin(np.pi * p / spec.M) ** 2
    return -(4.0 / spec.h**2) * (s[:, None] + s[None, :])


def write_csv(path: str | Path, u: np.ndarray) -> None:
    """M rows of M comma-separated values; row j holds y-index j."""
    np.savetxt(path, np.asarray(u), delimiter=",", fmt="%.17g")


def read_csv(path: str | Path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)


def write_pgm(path: str | Path, u: np.ndarray, bound: float) -> None:
    """Binary greyscale (P5) image, mapping ``[-bound, bound]`` onto ``0..255``."""
    u = np.asarray(u, dtype=float)
    scaled = np.round((np.clip(u, -bound, bound) + bound) / (2.0 * bound) * 255.0)
    pixels = scaled.astype(np.uint8)
    rows, cols = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())
