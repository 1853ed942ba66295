"""Built-in invariant checks run by ``acsolve selftest``.

Each check returns ``(name, ok, detail)``. They are small and fast; the
pytest suite covers the same ground in more depth.
"""
from __future__ import annotations

from dataclasses import replace

import numpy as np

from . import grid, kernels, scheme
from .grid import GridSpec
from .potential import Potential
from .scheme import SchemeConfig
from .solver import HelmholtzOperator
from .stabilizer import AuxFunctional

CHECKS = []


def check(fn):
    CHECKS.append(fn)
    return fn


def _stencil_matrix(spec: GridSpec) -> np.ndarray:
    M = spec.M
    A = np.zeros((M * M, M * M))
    for j in range(M):
        for i in range(M):
            row = j * M + i
            A[row, row] -= 4.0
            for dj, di in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                A[row, ((j + dj) % M) * M + (i + di) % M] += 1.0
    return A / spec.h**2


@check
def laplacian_matches_stencil_matrix():
    rng = np.random.default_rng(1)
    spec = GridSpec(1.0, 8)
    u = rng.standard_normal(spec.shape)
    dense = (_stencil_matrix(spec) @ u.ravel()).reshape(spec.shape)
    err = np.max(np.abs(grid.laplacian(spec, u) - dense)) / np.max(np.abs(dense))
    return err <= 1e-13, f"rel err {err:.2e}"


@check
def summation_by_parts():
    rng = np.random.default_rng(2)
    spec = GridSpec(2.0, 8)
    u = rng.standard_normal(spec.shape)
    lhs = -grid.inner(spec, grid.laplacian(spec, u), u)
    rhs = grid.grad_norm_sq(spec, u)
    err = abs(lhs - rhs) / abs(rhs)
    return err <= 1e-13, f"rel err {err:.2e}"


@check
def potential_derivatives():
    worst = 0.0
    d = 1e-5
    for pot in (Potential.double_well(), Potential.flory_huggins()):
        x = np.linspace(-0.9 * pot.beta, 0.9 * pot.beta, 201)
        worst = max(worst, np.max(np.abs(pot.f(x) + (pot.F(x + d) - pot.F(x - d)) / (2 * d))))
        worst = max(worst, np.max(np.abs(pot.f_prime(x) - (pot.f(x + d) - pot.f(x - d)) / (2 * d))))
    return worst <= 1e-6, f"max FD mismatch {worst:.2e}"


@check
def flory_huggins_bound():
    pot = Potential.flory_huggins()
    ok = abs(pot.beta - 0.9575) <= 5e-4 and abs(float(pot.f(pot.beta))) <= 1e-12 and abs(pot.kappa_default - 8.02) < 5e-3
    return ok, f"beta {pot.beta:.6f}, kappa {pot.kappa_default:.4f}"


@check
def hermite_cutoff_properties():
    V = AuxFunctional("hermite")
    z = np.linspace(-3.0, 4.0, 100_001)
    v = V(z)
    dv = V.prime(z)
    knots = np.array([0.0, 0.5, 1.5, 2.0])
    jump = max(np.max(np.abs(V(knots - 1e-13) - V(knots + 1e-13))), np.max(np.abs(V.prime(knots - 1e-13) - V.prime(knots + 1e-13))))
    ok = v.min() >= 0 and v.max() <= 1 and np.max(np.abs(dv)) <= 49 / 24 + 1e-12 and V(1.0) == 1.0 and V.prime(1.0) == 0.0
    return ok and jump < 1e-10, f"range [{v.min():.3g}, {v.max():.3g}], max |V'| {np.max(np.abs(dv)):.6f}"


@check
def bdf2_exact_on_quadratics():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(20):
        taus = rng.uniform(0.2, 1.0, 6)
        t = np.concatenate([[0.0], np.cumsum(taus)])
        for n in range(2, 7):
            s = kernels.make_step(n, taus[n - 1], taus[n - 2])
            for p, dp in ((lambda x: 1.0 + 0 * x, lambda x: 0.0), (lambda x: x, lambda x: 1.0), (lambda x: x * x, lambda x: 2 * x)):
                got = kernels.bdf_difference(s, p(t[n]), p(t[n - 1]), p(t[n - 2]))
                want = dp(t[n])
                worst = max(worst, abs(got - want) / max(1.0, abs(want)))
    return worst <= 1e-10, f"max rel err {worst:.2e}"


@check
def positive_definiteness():
    rng = np.random.default_rng(4)
    policy = kernels.RatioPolicy()
    r_max = policy.r_max_energy
    worst = np.inf
    for _ in range(2000):
        tau_prev = rng.uniform(0.01, 1.0)
        r, r_next = rng.uniform(1e-3, r_max, 2)
        tau = r * tau_prev
        w1, w2 = rng.standard_normal(2)
        s = kernels.make_step(2, tau, tau_prev)
        lhs = w2 * (s.b0 * w2 + s.b1 * w1)
        rhs = (
            kernels.g_coefficient(r_next, r_max, tau) * w2**2
            - kernels.g_coefficient(r, r_max, tau_prev) * w1**2
            + policy.delta * w2**2 / (32 * tau)
        )
        worst = min(worst, lhs - rhs)
    return worst >= -1e-12, f"min margin {worst:.3e}"


@check
def mbp_stepsize_thresholds():
    h = 1 / 128
    dw = kernels.mbp_tau_bound(2.0, 1e-4, h, 1.0)
    fh = kernels.mbp_tau_bound(Potential.flory_huggins().kappa_default, 1e-4, h, 1.0)
    ok = f"{dw:.3g}" == "0.0585" and f"{fh:.3g}" == "0.0343"
    return ok, f"DW {dw:.5f}, FH {fh:.5f}"


@check
def helmholtz_matches_dense_solve():
    rng = np.random.default_rng(5)
    spec = GridSpec(1.0, 8)
    A = _stencil_matrix(spec)
    worst = 0.0
    for _ in range(10):
        a, eps2 = rng.uniform(0.1, 10.0), rng.uniform(0.0, 0.1)
        rhs = rng.standard_normal(spec.shape)
        dense = np.linalg.solve(a * np.eye(spec.M**2) - eps2 * A, rhs.ravel()).reshape(spec.shape)
        worst = max(worst, np.max(np.abs(HelmholtzOperator(spec, a, eps2).solve(rhs) - dense)))
    return worst <= 1e-12, f"max abs diff {worst:.2e}"


@check
def steady_states_are_fixed():
    spec = GridSpec(1.0, 8)
    worst = 0.0
    for variant in scheme.VARIANTS:
        for value in (1.0, 0.0, -1.0):
            cfg = SchemeConfig(spec, Potential.double_well(), 0.01, variant=variant)
            state = scheme.init(cfg, spec.full(value))
            for tau in (0.1, 0.2, 0.15):
                state, _ = scheme.step(cfg, state, tau)
            worst = max(worst, np.max(np.abs(state.phi - value)))
    return worst <= 1e-12, f"max drift {worst:.2e}"


@check
def variants_agree_when_v_pinned():
    rng = np.random.default_rng(6)
    spec = GridSpec(1.0, 16)
    phi0 = rng.uniform(-0.8, 0.8, spec.shape)
    base = SchemeConfig(spec, Potential.double_well(), 1e-3, pin_v=1.0)
    finals = []
    for variant in scheme.VARIANTS:
        cfg = replace(base, variant=variant)
        state = scheme.init(cfg, phi0)
        for tau in (0.01, 0.02, 0.015):
            state, _ = scheme.step(cfg, state, tau)
        finals.append(state.phi)
    diff = max(np.max(np.abs(finals[0] - f)) for f in finals[1:])
    return diff <= 1e-12, f"max variant spread {diff:.2e}"


def run_all():
    results = []
    for fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as err:  # noqa: BLE001
            ok, detail = False, f"raised {type(err).__name__}: {err}"
        results.append((fn.__name__, bool(ok), detail))
    return results
