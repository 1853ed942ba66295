from dataclasses import replace

import numpy as np
import pytest

from acsolve import grid, kernels, scheme, timegrid
from acsolve.grid import GridSpec
from acsolve.potential import Potential, PotentialDomainError
from acsolve.scheme import MBPBreachError, SavOverflowError, SchemeConfig
from acsolve.trajectory import run_fixed
from oracles import naive_e1h, scalar_sesav1_first_step

DW = Potential.double_well()
FH = Potential.flory_huggins()


def dw_cfg(M=8, L=1.0, eps2=0.01, **kw):
    return SchemeConfig(GridSpec(L, M), DW, eps2, **kw)


def test_config_validation():
    with pytest.raises(ValueError):
        dw_cfg(variant="SESAV4")
    with pytest.raises(ValueError):
        dw_cfg(eps2=0.0)
    with pytest.raises(ValueError):
        dw_cfg(kappa=-1.0)
    assert dw_cfg().kappa_value == 2.0 and dw_cfg(kappa=0.0).kappa_value == 0.0


def test_init(rng):
    cfg = dw_cfg()
    assert scheme.init(cfg, cfg.spec.full(1.0)).R == 0.0
    assert scheme.init(cfg, cfg.spec.zeros()).R == pytest.approx(0.25)
    phi0 = rng.uniform(-0.8, 0.8, cfg.spec.shape)
    assert scheme.init(cfg, phi0).R == pytest.approx(naive_e1h(DW, cfg.spec, phi0), rel=1e-14)


def test_init_domain_error():
    cfg = SchemeConfig(GridSpec(1.0, 4), FH, 0.01)
    with pytest.raises(PotentialDomainError):
        scheme.init(cfg, cfg.spec.full(1.0))


def test_predictor_constants():
    cfg = dw_cfg(kappa=2.0)
    for c, want in ((0.0, 0.0), (1.0, 1.0), (0.5, 0.53125)):
        state = scheme.init(cfg, cfg.spec.full(c))
        hat = scheme.predict(cfg, state, 0.1)
        np.testing.assert_allclose(hat, want, rtol=0, atol=1e-15)


def test_first_step_scalar_oracle():
    cfg = dw_cfg(kappa=2.0)
    state = scheme.init(cfg, cfg.spec.full(0.5))
    new, rec = scheme.step(cfg, state, 0.1)
    hat, g, v, phi1, R1 = scalar_sesav1_first_step(DW, 1.0, 0.01, 2.0, 0.1, 0.5)
    assert rec.g_value == pytest.approx(g, rel=1e-13)
    assert rec.v_of_g == pytest.approx(v, rel=1e-13)
    np.testing.assert_allclose(new.phi, phi1, rtol=1e-14)
    assert new.R == pytest.approx(R1, rel=1e-12)
    assert new.n == 1 and new.t == 0.1 and new.tau_prev == 0.1


@pytest.mark.parametrize("variant", scheme.VARIANTS)
@pytest.mark.parametrize("value", [1.0, -1.0, 0.0])
def test_steady_states(variant, value):
    cfg = dw_cfg(variant=variant)
    state = scheme.init(cfg, cfg.spec.full(value))
    R0 = state.R
    for tau in (0.05, 0.1, 0.2, 0.08):
        hat = scheme.predict(cfg, state, tau)
        assert scheme.g_h(DW, cfg.spec, hat, state.R) == pytest.approx(1.0, abs=1e-12)
        state, rec = scheme.step(cfg, state, tau)
        assert np.max(np.abs(state.phi - value)) <= 1e-12
        assert state.R == pytest.approx(R0, abs=1e-12)


def test_flory_huggins_steady_state():
    cfg = SchemeConfig(GridSpec(1.0, 8), FH, 0.01)
    state = scheme.init(cfg, cfg.spec.full(FH.beta))
    for tau in (0.05, 0.1):
        state, _ = scheme.step(cfg, state, tau)
    assert np.max(np.abs(state.phi - FH.beta)) <= 1e-12


def test_heat_mode_matches_per_mode_recursion():
    spec = GridSpec(1.0, 16)
    eps2 = 0.01
    cfg = SchemeConfig(spec, Potential("zero"), eps2, kappa=0.0, pin_v=1.0)
    X, Y = spec.coords()
    mode = np.sin(2 * np.pi * X) * np.sin(2 * np.pi * 2 * Y)
    lam = -(4 / spec.h**2) * (np.sin(np.pi / 16) ** 2 + np.sin(2 * np.pi / 16) ** 2)
    taus = timegrid.random_ratio(1.0, 12, 2.4, seed=4).taus
    traj = run_fixed(cfg, mode, taus)
    # scalar amplitude recursion of the same scheme
    amp = [1.0]
    for n, tau in enumerate(taus, start=1):
        s = kernels.make_step(n, tau, taus[n - 2] if n >= 2 else None)
        rhs = s.b0 * amp[-1] - (s.b1 * (amp[-1] - amp[-2]) if n >= 2 else 0.0)
        amp.append(rhs / (s.b0 - eps2 * lam))
    np.testing.assert_allclose(traj.state.phi, amp[-1] * mode, atol=1e-13)


def test_heat_mode_second_order():
    spec = GridSpec(1.0, 8)
    eps2 = 0.01
    X, Y = spec.coords()
    mode = np.sin(2 * np.pi * X) * np.sin(2 * np.pi * Y)
    lam = -(8 / spec.h**2) * np.sin(np.pi / 8) ** 2
    T = 1.0
    errs, steps = [], [1 / 10, 1 / 20, 1 / 40, 1 / 80]
    for variant in scheme.VARIANTS:
        cfg = SchemeConfig(spec, Potential("zero"), eps2, variant=variant, kappa=0.0, pin_v=1.0)
        errs = [
            grid.norm_inf(run_fixed(cfg, mode, timegrid.uniform(T, round(T / tau)).taus).state.phi - np.exp(eps2 * lam * T) * mode)
            for tau in steps
        ]
        order = np.polyfit(np.log(steps), np.log(errs), 1)[0]
        assert abs(order - 2.0) <= 0.1


def test_variants_coincide_when_v_pinned(rng):
    spec = GridSpec(1.0, 16)
    phi0 = rng.uniform(-0.8, 0.8, spec.shape)
    taus = timegrid.random_ratio(0.2, 10, 2.0, seed=9).taus
    finals = [
        run_fixed(SchemeConfig(spec, DW, 1e-3, variant=v, pin_v=1.0), phi0, taus).state.phi for v in scheme.VARIANTS
    ]
    for other in finals[1:]:
        assert np.max(np.abs(finals[0] - other)) <= 1e-12


def test_energy_examples(rng):
    cfg = dw_cfg()
    assert scheme.energy_original(cfg, cfg.spec.full(1.0)) == 0.0
    assert scheme.energy_original(cfg, cfg.spec.zeros()) == pytest.approx(0.25)
    state = scheme.init(cfg, rng.uniform(-0.8, 0.8, cfg.spec.shape))
    assert scheme.energy_modified(cfg, state, 1.0) == scheme.energy_original(cfg, state.phi)
    rec = scheme.initial_record(cfg, state)
    assert rec.energy_mod == rec.energy_orig and rec.g_value == 1.0


def test_g_term_and_lookahead(rng):
    cfg = dw_cfg(M=16, eps2=1e-3)
    state = scheme.init(cfg, rng.uniform(-0.8, 0.8, cfg.spec.shape))
    new, rec = scheme.step(cfg, state, 0.05, tau_next=0.1)
    base = 0.5 * cfg.eps2 * grid.grad_norm_sq(cfg.spec, new.phi) + new.R
    c = kernels.g_coefficient(2.0, cfg.ratio_policy.r_max_energy, 0.05)
    dphi = new.phi - state.phi
    assert rec.energy_mod == pytest.approx(base + c * grid.inner(cfg.spec, dphi, dphi), rel=1e-14)
    _, last = scheme.step(cfg, state, 0.05)
    assert last.energy_mod == pytest.approx(base, rel=1e-14)
    assert scheme.with_r_next(cfg, new, last, 2.0).energy_mod == pytest.approx(rec.energy_mod, rel=1e-14)


@pytest.mark.parametrize("variant", scheme.VARIANTS)
@pytest.mark.parametrize("kappa", [0.0, None])
def test_energy_dissipation_every_variant(rng, variant, kappa):
    spec = GridSpec(1.0, 32)
    cfg = SchemeConfig(spec, DW, 1e-3, variant=variant, kappa=kappa)
    taus = timegrid.random_ratio(2.0, 40, 4.8, seed=3).taus
    traj = run_fixed(cfg, rng.uniform(-0.8, 0.8, spec.shape), taus)
    assert traj.energy_monotone


def test_predictor_mbp_any_tau(rng):
    for pot in (DW, FH):
        cfg = SchemeConfig(GridSpec(1.0, 32), pot, 1e-4)
        b = pot.beta
        state = scheme.init(cfg, rng.uniform(-b, b, cfg.spec.shape))
        for tau in (1e-3, 0.1, 10.0, 1e4):
            assert grid.norm_inf(scheme.predict(cfg, state, tau)) <= b + 1e-12


def test_mbp_under_stepsize_bound(rng):
    spec = GridSpec(1.0, 32)
    for pot in (DW, FH):
        cfg = SchemeConfig(spec, pot, 1e-4, ratio_policy=kernels.RatioPolicy("mbp"))
        bound = kernels.mbp_tau_bound(pot.kappa_default, 1e-4, spec.h, 2.0)
        taus = bound * rng.uniform(0.5, 1.0, 60)
        eta = kernels.eta_star(2.0)
        traj = run_fixed(cfg, rng.uniform(-0.8, 0.8, spec.shape), taus, eta=eta)
        assert traj.max_norm <= pot.beta + 1e-12
        assert traj.psi_max <= (1 - eta) * pot.beta + 1e-12
        assert traj.energy_monotone


def test_flory_huggins_breach_and_clamp(rng):
    spec = GridSpec(1.0, 16)
    phi0 = rng.uniform(-0.95, 0.95, spec.shape)
    cfg = SchemeConfig(spec, FH, 1e-4, variant="SESAV2", kappa=0.0)
    with pytest.raises((MBPBreachError, PotentialDomainError)):
        run_fixed(cfg, phi0, [5.0] * 10)
    clamped = run_fixed(replace(cfg, clamp=True), phi0, [5.0] * 10)
    assert clamped.max_norm <= FH.beta
    assert any(r.clamped for r in clamped.records)


def test_overflow_is_an_error():
    spec = GridSpec(1.0, 4)
    cfg = SchemeConfig(spec, DW, 0.01)
    state = scheme.SchemeState(0, 0.0, spec.full(0.5), R=1e4)
    with pytest.raises(SavOverflowError):
        scheme.step(cfg, state, 0.1)


def test_ratio_policy_enforced_in_step():
    cfg = dw_cfg(ratio_policy=kernels.RatioPolicy("mbp"))
    state = scheme.init(cfg, cfg.spec.full(0.3))
    state, _ = scheme.step(cfg, state, 0.01)
    with pytest.raises(kernels.RatioViolationError):
        scheme.step(cfg, state, 0.03)


def test_trace_row_layout(rng):
    cfg = dw_cfg()
    state = scheme.init(cfg, rng.uniform(-0.5, 0.5, cfg.spec.shape))
    _, rec = scheme.step(cfg, state, 0.1)
    row = rec.row()
    assert len(row) == len(scheme.TRACE_COLUMNS) and row[0] == 1 and row[2] == 0.1
