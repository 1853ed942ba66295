"""Drivers that march the scheme over a whole time grid."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import scheme
from .kernels import MBP_RATIO_LIMIT, eta_star
from .scheme import SchemeConfig, SchemeState, TraceRecord
from .timegrid import AdaptiveParams, adaptive_next

# relative slack allowed per step in the modified-energy monotonicity check
ENERGY_SLACK = 1e-10
MBP_SLACK = 1e-12


@dataclass
class Trajectory:
    records: list[TraceRecord]
    state: SchemeState
    eta: float
    snapshots: list[tuple[float, np.ndarray]] = field(default_factory=list)

    @property
    def taus(self) -> np.ndarray:
        return np.array([r.tau for r in self.records[1:]])

    @property
    def max_norm(self) -> float:
        return max(r.max_norm for r in self.records)

    @property
    def psi_max(self) -> float:
        return max(r.psi_max for r in self.records[1:]) if len(self.records) > 1 else self.records[0].psi_max

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    def energy_excess(self) -> float:
        """Worst ``E^n - E^{n-1} - slack`` of the modified energy; <= 0 means monotone."""
        e = self.column("energy_mod")
        if len(e) < 2:
            return -np.inf
        return float(np.max(e[1:] - e[:-1] - ENERGY_SLACK * (1.0 + np.abs(e[:-1]))))

    @property
    def energy_monotone(self) -> bool:
        return self.energy_excess() <= 0.0


def default_eta(r_max: float) -> float:
    """Recombination parameter for the psi diagnostic, ``eta*`` of the largest ratio."""
    return eta_star(min(max(1.0, r_max), MBP_RATIO_LIMIT))


class _Snapshotter:
    def __init__(self, times):
        self.pending = sorted(float(t) for t in times)
        self.taken: list[tuple[float, np.ndarray]] = []

    def offer(self, t: float, phi: np.ndarray) -> None:
        # first grid time at or past each requested time
        while self.pending and t >= self.pending[0] - 1e-12:
            self.pending.pop(0)
            self.taken.append((t, phi.copy()))


def run_fixed(
    cfg: SchemeConfig,
    phi0: np.ndarray,
    taus,
    eta: float | None = None,
    snapshot_times=(),
) -> Trajectory:
    taus = np.asarray(taus, dtype=float)
    if eta is None:
        ratios = taus[1:] / taus[:-1] if len(taus) > 1 else np.ones(1)
        eta = default_eta(float(ratios.max()))
    state = scheme.init(cfg, phi0)
    records = [scheme.initial_record(cfg, state)]
    snaps = _Snapshotter(snapshot_times)
    snaps.offer(0.0, state.phi)
    for k, tau in enumerate(taus):
        tau_next = taus[k + 1] if k + 1 < len(taus) else None
        state, rec = scheme.step(cfg, state, float(tau), tau_next, eta)
        records.append(rec)
        snaps.offer(state.t, state.phi)
    return Trajectory(records, state, eta, snaps.taken)


def run_adaptive(
    cfg: SchemeConfig,
    phi0: np.ndarray,
    T: float,
    params: AdaptiveParams,
    eta: float | None = None,
    energy_signal: str = "original",
    snapshot_times=(),
) -> Trajectory:
    """March to ``T`` choosing each step from the previous energy change.

    The first step is ``tau_min``; the last one is shortened to land on ``T``.
    With ``energy_signal="modified"`` the controller sees ``eps^2/2 |grad phi|^2 + R``.
    """
    if energy_signal not in ("original", "modified"):
        raise ValueError(f"energy_signal: expected 'original' or 'modified', got {energy_signal!r}")
    if eta is None:
        eta = default_eta(params.r_max)
    state = scheme.init(cfg, phi0)
    records = [scheme.initial_record(cfg, state)]
    snaps = _Snapshotter(snapshot_times)
    snaps.offer(0.0, state.phi)
    signal = "energy_orig" if energy_signal == "original" else "energy_mod"
    tau = min(params.tau_min, T)
    e_prev = getattr(records[0], signal)
    while True:
        state, rec = scheme.step(cfg, state, tau, None, eta)
        e_now = getattr(rec, signal)
        snaps.offer(state.t, state.phi)
        remaining = T - state.t
        if remaining <= 1e-12 * T:
            records.append(rec)
            break
        tau_next = min(adaptive_next(params, tau, e_now, e_prev), remaining)
        records.append(scheme.with_r_next(cfg, state, rec, tau_next / tau))
        e_prev = e_now
        tau = tau_next
    return Trajectory(records, state, eta, snaps.taken)
