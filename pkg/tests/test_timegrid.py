import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from acsolve import timegrid
from acsolve.grid import GridSpec
from acsolve.potential import ConfigError, Potential
from acsolve.scheme import SchemeConfig
from acsolve.timegrid import AdaptiveParams, adaptive_next
from acsolve.trajectory import run_adaptive


def test_uniform():
    g = timegrid.uniform(1.0, 4)
    assert list(g.taus) == [0.25] * 4
    assert np.all(g.ratios == 1.0)
    assert g.taus.sum() == 1.0 and g.N == 4
    assert g.times[-1] == 1.0
    with pytest.raises(ValueError):
        timegrid.uniform(1.0, 0)


def test_random_ratio_bound_many_seeds():
    for seed in range(1000):
        g = timegrid.random_ratio(1.0, 40, 2.4, seed)
        assert np.all(g.ratios < 2.4)
        assert g.taus.sum() == pytest.approx(1.0, rel=1e-12)


def test_random_ratio_reproducible():
    a = timegrid.random_ratio(3.0, 25, 2.4, 7)
    b = timegrid.random_ratio(3.0, 25, 2.4, 7)
    c = timegrid.random_ratio(3.0, 25, 2.4, 8)
    assert np.array_equal(a.taus, b.taus) and not np.array_equal(a.taus, c.taus)
    with pytest.raises(ValueError):
        timegrid.random_ratio(1.0, 5, 1.0, 0)


def test_shrink_first_step():
    g = timegrid.shrink_first_step(timegrid.uniform(1.0, 10))
    tau = 0.1
    assert g.taus[0] <= tau ** (4 / 3)
    assert g.taus.sum() == pytest.approx(1.0, rel=1e-12)
    assert np.all(g.ratios < g.r_max_used)
    assert np.array_equal(g.taus[-9:], np.full(9, 0.1))


def test_shrink_first_step_rejects_ratio_above_r_max():
    with pytest.raises(ConfigError):
        timegrid.shrink_first_step(timegrid.random_ratio(1.0, 10, 1.5, 0), ratio=2.0, r_max=1.5)


def test_adaptive_examples():
    p = AdaptiveParams(0.04, 0.4, 1e8, 2.4)
    assert adaptive_next(p, 1.0, 3.0, 3.0) == 0.4
    assert adaptive_next(p, 0.1, 3.0, 3.0) == pytest.approx(0.24)
    assert adaptive_next(AdaptiveParams(0.04, 0.4, 0.0, 2.4), 1.0, 0.0, 5.0) == 0.4
    # slope -0.01
    assert adaptive_next(p, 0.1, 1.0 - 0.001, 1.0) == 0.04


def test_adaptive_params_validation():
    with pytest.raises(ConfigError):
        AdaptiveParams(0.5, 0.4)
    with pytest.raises(ConfigError):
        AdaptiveParams(alpha=-1.0)
    with pytest.raises(ConfigError):
        AdaptiveParams(r_max=1.0)


@settings(max_examples=300, deadline=None)
@given(st.floats(1e-4, 1.0), st.floats(-1e3, 1e3), st.floats(0, 1e10), st.floats(1.01, 4.8))
def test_adaptive_range(tau_n, slope, alpha, r_max):
    p = AdaptiveParams(0.04, 0.4, alpha, r_max)
    out = adaptive_next(p, tau_n, slope * tau_n, 0.0)
    lo = min(p.tau_min, r_max * tau_n)
    hi = min(p.tau_max, r_max * tau_n)
    assert lo - 1e-15 <= out <= hi + 1e-15


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-3, 1.0), st.floats(0, 100), st.floats(0, 100))
def test_adaptive_monotone_in_slope(tau_n, s1, s2):
    p = AdaptiveParams()
    a, b = sorted((s1, s2))
    assert adaptive_next(p, tau_n, b * tau_n, 0.0) <= adaptive_next(p, tau_n, a * tau_n, 0.0)


def test_run_adaptive_lands_on_T(rng):
    spec = GridSpec(1.0, 32)
    cfg = SchemeConfig(spec, Potential.double_well(), 1e-3)
    p = AdaptiveParams(0.01, 0.1, 1e4, 2.4)
    traj = run_adaptive(cfg, rng.uniform(-0.8, 0.8, spec.shape), 3.0, p, snapshot_times=(1.0, 2.0))
    taus = traj.taus
    assert taus[0] == 0.01
    assert traj.state.t == pytest.approx(3.0, rel=1e-12)
    assert np.all(taus[:-1] >= 0.01 - 1e-15) and np.all(taus <= 0.1 + 1e-15)
    assert np.all(taus[1:] / taus[:-1] <= 2.4 + 1e-12)
    assert traj.energy_monotone
    assert [round(t, 6) >= s for (t, _), s in zip(traj.snapshots, (1.0, 2.0))] == [True, True]
    with pytest.raises(ValueError):
        run_adaptive(cfg, spec.zeros(), 1.0, p, energy_signal="free")


def test_run_adaptive_modified_signal(rng):
    spec = GridSpec(1.0, 16)
    cfg = SchemeConfig(spec, Potential.double_well(), 1e-3)
    traj = run_adaptive(cfg, rng.uniform(-0.8, 0.8, spec.shape), 1.0, AdaptiveParams(0.01, 0.1, 1e4), energy_signal="modified")
    assert traj.energy_monotone and traj.state.t == pytest.approx(1.0)
