"""Linear variable-step BDF2 stabilized exponential-SAV steppers.

One step from ``phi^{n-1}`` (and ``phi^{n-2}``) does:

1. a backward-Euler predictor
   ``((1/tau + kappa) I - eps^2 Delta_h) phi_hat = (1/tau + kappa) phi^{n-1} + f(phi^{n-1})``;
2. ``V* = V(g_h(phi_hat, R^{n-1}))``;
3. one Helmholtz solve for ``phi^n`` whose stabilization depends on the variant:

   SESAV1  ``kappa (phi^n - V* phi_hat)``   (unbalanced)
   SESAV2  ``kappa (phi^n - phi_hat)``
   SESAV3  ``kappa V* (phi^n - phi_hat)``

4. an explicit first-order update of the scalar variable ``R``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import grid
from .grid import GridSpec
from .kernels import BdfStep, RatioPolicy, g_coefficient, make_step
from .potential import Potential
from .solver import HelmholtzOperator
from .stabilizer import AuxFunctional, g_h

VARIANTS = ("SESAV1", "SESAV2", "SESAV3")

TRACE_COLUMNS = ("n", "t", "tau", "max_norm", "energy_orig", "energy_mod", "g_value", "v_of_g", "psi_max")


class SchemeError(RuntimeError):
    pass


class MBPBreachError(SchemeError):
    """The field left the admissible interval of a logarithmic potential."""

    def __init__(self, n: int, t: float, value: float):
        self.n, self.t, self.value = n, t, value
        super().__init__(f"MBP breach at step {n} (t = {t:.6g}): max |phi| = {value:.17g} >= 1")


class SavOverflowError(SchemeError):
    pass


@dataclass(frozen=True)
class SchemeConfig:
    spec: GridSpec
    potential: Potential
    eps2: float
    variant: str = "SESAV1"
    kappa: float | None = None
    stabilizer: AuxFunctional = field(default_factory=AuxFunctional)
    ratio_policy: RatioPolicy = field(default_factory=RatioPolicy)
    clamp: bool = False
    # verification only: force V* to this value instead of V(g)
    pin_v: float | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant: unknown {self.variant!r}, expected one of {VARIANTS}")
        if not self.eps2 > 0:
            raise ValueError(f"eps2: must be positive, got {self.eps2}")
        if self.kappa is not None and self.kappa < 0:
            raise ValueError(f"kappa: must be non-negative, got {self.kappa}")

    @property
    def kappa_value(self) -> float:
        return self.potential.kappa_default if self.kappa is None else self.kappa


@dataclass(frozen=True)
class SchemeState:
    n: int
    t: float
    phi: np.ndarray
    R: float
    phi_prev: np.ndarray | None = None
    tau_prev: float | None = None


@dataclass(frozen=True)
class TraceRecord:
    n: int
    t: float
    tau: float
    max_norm: float
    energy_orig: float
    energy_mod: float
    g_value: float
    v_of_g: float
    psi_max: float
    clamped: bool = False

    def row(self) -> tuple:
        return tuple(getattr(self, c) for c in TRACE_COLUMNS)


def init(cfg: SchemeConfig, phi0: np.ndarray) -> SchemeState:
    phi0 = cfg.spec.check(phi0).copy()
    return SchemeState(n=0, t=0.0, phi=phi0, R=cfg.potential.e1h(cfg.spec, phi0))


def energy_original(cfg: SchemeConfig, phi: np.ndarray) -> float:
    return 0.5 * cfg.eps2 * grid.grad_norm_sq(cfg.spec, phi) + cfg.potential.e1h(cfg.spec, phi)


def energy_modified(cfg: SchemeConfig, state: SchemeState, r_next: float = 0.0) -> float:
    """Modified energy at ``state``; the G-term needs the upcoming ratio ``r_next``."""
    value = 0.5 * cfg.eps2 * grid.grad_norm_sq(cfg.spec, state.phi) + state.R
    if state.n >= 1 and r_next > 0:
        c = g_coefficient(r_next, cfg.ratio_policy.r_max_energy, state.tau_prev)
        dphi = state.phi - state.phi_prev
        value += c * grid.inner(cfg.spec, dphi, dphi)
    return value


def initial_record(cfg: SchemeConfig, state: SchemeState) -> TraceRecord:
    e = energy_original(cfg, state.phi)
    g = g_h(cfg.potential, cfg.spec, state.phi, state.R)
    m = grid.norm_inf(state.phi)
    return TraceRecord(0, 0.0, 0.0, m, e, energy_modified(cfg, state), g, float(cfg.stabilizer(g)), m)


def _guard(cfg: SchemeConfig, u: np.ndarray, n: int, t: float) -> tuple[np.ndarray, bool]:
    if cfg.potential.kind != "flory-huggins":
        return u, False
    worst = grid.norm_inf(u)
    if worst < 1.0:
        return u, False
    if cfg.clamp:
        b = cfg.potential.beta
        return np.clip(u, -b, b), True
    raise MBPBreachError(n, t, worst)


def predict(cfg: SchemeConfig, state: SchemeState, tau_n: float) -> np.ndarray:
    """Backward-Euler stabilized predictor from ``state.phi``."""
    if not tau_n > 0:
        raise ValueError(f"tau must be positive, got {tau_n}")
    a = 1.0 / tau_n + cfg.kappa_value
    rhs = a * state.phi + cfg.potential.f(state.phi)
    return HelmholtzOperator(cfg.spec, a, cfg.eps2).solve(rhs)


def step(
    cfg: SchemeConfig,
    state: SchemeState,
    tau_n: float,
    tau_next: float | None = None,
    eta: float = 0.5,
) -> tuple[SchemeState, TraceRecord]:
    """Advance one step of size ``tau_n``.

    ``tau_next`` only enters the modified energy in the returned record
    (``None`` drops the G-term); ``eta`` only enters the ``psi_max``
    diagnostic.
    """
    n = state.n + 1
    t = state.t + tau_n
    bdf = make_step(n, tau_n, state.tau_prev, cfg.ratio_policy)
    kappa = cfg.kappa_value
    pot = cfg.potential

    phi_hat, clamped = _guard(cfg, predict(cfg, state, tau_n), n, t)
    g = g_h(pot, cfg.spec, phi_hat, state.R)
    if math.isinf(g):
        raise SavOverflowError(f"step {n}: g_h overflow, R - E_1h[phi_hat] > 700")
    v = float(cfg.stabilizer(g)) if cfg.pin_v is None else float(cfg.pin_v)

    phi_new = _correct(cfg, bdf, state, phi_hat, v)
    phi_new, clamped_new = _guard(cfg, phi_new, n, t)
    clamped = clamped or clamped_new

    f_hat = pot.f(phi_hat)
    dphi = phi_new - state.phi
    if cfg.variant == "SESAV1":
        R_new = state.R - grid.inner(cfg.spec, v * f_hat - kappa * (phi_new - v * phi_hat), dphi)
    elif cfg.variant == "SESAV2":
        R_new = state.R - grid.inner(cfg.spec, v * f_hat - kappa * (phi_new - phi_hat), dphi)
    else:
        R_new = state.R - v * grid.inner(cfg.spec, f_hat - kappa * (phi_new - phi_hat), dphi)

    new = SchemeState(n=n, t=t, phi=phi_new, R=R_new, phi_prev=state.phi, tau_prev=tau_n)
    r_next = 0.0 if tau_next is None else tau_next / tau_n
    m = grid.norm_inf(phi_new)
    rec = TraceRecord(
        n=n,
        t=t,
        tau=tau_n,
        max_norm=m,
        energy_orig=energy_original(cfg, phi_new),
        energy_mod=energy_modified(cfg, new, r_next),
        g_value=g,
        v_of_g=v,
        psi_max=grid.norm_inf(phi_new - eta * state.phi),
        clamped=clamped,
    )
    return new, rec


def _correct(cfg: SchemeConfig, bdf: BdfStep, state: SchemeState, phi_hat: np.ndarray, v: float) -> np.ndarray:
    kappa = cfg.kappa_value
    f_hat = cfg.potential.f(phi_hat)
    rhs = bdf.b0 * state.phi
    if bdf.n >= 2:
        rhs = rhs - bdf.b1 * (state.phi - state.phi_prev)
    if cfg.variant == "SESAV1":
        a = bdf.b0 + kappa
        rhs = rhs + v * (f_hat + kappa * phi_hat)
    elif cfg.variant == "SESAV2":
        a = bdf.b0 + kappa
        rhs = rhs + v * f_hat + kappa * phi_hat
    else:
        a = bdf.b0 + kappa * v
        rhs = rhs + v * (f_hat + kappa * phi_hat)
    return HelmholtzOperator(cfg.spec, a, cfg.eps2).solve(rhs)


def with_r_next(cfg: SchemeConfig, state: SchemeState, rec: TraceRecord, r_next: float) -> TraceRecord:
    """Recompute a record's modified energy once the next ratio is known."""
    return replace(rec, energy_mod=energy_modified(cfg, state, r_next))
