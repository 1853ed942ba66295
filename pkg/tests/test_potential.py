import numpy as np
import pytest

from acsolve.grid import GridSpec
from acsolve.potential import ConfigError, Potential, PotentialDomainError, compute_beta
from oracles import naive_e1h

DW = Potential.double_well()
FH = Potential.flory_huggins()


def test_double_well_values():
    assert DW.f(0.0) == 0.0 and DW.f(1.0) == 0.0
    assert DW.F(0.0) == 0.25
    assert DW.beta == 1.0
    assert DW.kappa_default == pytest.approx(2.0)


def test_flory_huggins_constants():
    assert FH.f(0.0) == 0.0
    assert abs(FH.beta - 0.9575) <= 5e-4
    assert abs(float(FH.f(FH.beta))) <= 1e-12
    assert float(FH.f_prime(FH.beta)) == pytest.approx(-8.017, abs=1e-3)
    assert FH.kappa_default == pytest.approx(8.02, abs=5e-3)
    assert compute_beta(FH) == FH.beta


def test_flory_huggins_parameter_check():
    with pytest.raises(ConfigError):
        Potential("flory-huggins", theta=1.6, theta_c=0.8)
    with pytest.raises(ConfigError):
        Potential("flory-huggins", theta=0.0, theta_c=0.8)
    with pytest.raises(ConfigError):
        Potential("quartic")


def test_no_sign_change_is_a_config_error():
    # theta_c <= theta: f has no positive root below 1
    with pytest.raises(ConfigError):
        Potential("flory-huggins", theta=0.8, theta_c=0.79)


@pytest.mark.parametrize("x", [1.0, -1.0, 1.2, np.array([0.1, -1.0])])
def test_domain_error_carries_value(x):
    with pytest.raises(PotentialDomainError) as info:
        FH.f(x)
    assert info.value.value >= 1.0
    with pytest.raises(PotentialDomainError):
        FH.F(x)


@pytest.mark.parametrize("pot", [DW, FH], ids=["dw", "fh"])
def test_finite_difference_consistency(pot):
    d = 1e-5
    x = np.linspace(-pot.beta, pot.beta, 401) * 0.999
    assert np.max(np.abs(pot.f(x) + (pot.F(x + d) - pot.F(x - d)) / (2 * d))) <= 1e-6
    assert np.max(np.abs(pot.f_prime(x) - (pot.f(x + d) - pot.f(x - d)) / (2 * d))) <= 1e-6


@pytest.mark.parametrize("pot", [DW, FH], ids=["dw", "fh"])
def test_symmetry(pot):
    x = np.linspace(0, pot.beta, 101) * 0.999
    np.testing.assert_allclose(pot.F(-x), pot.F(x), rtol=0, atol=1e-13)
    np.testing.assert_allclose(pot.f(-x), -pot.f(x), rtol=0, atol=1e-13)


@pytest.mark.parametrize("pot", [DW, FH], ids=["dw", "fh"])
def test_bound_conditions(pot, rng):
    b = pot.beta
    assert pot.f(b) <= 1e-15 and pot.f(-b) >= -1e-15
    sample = np.linspace(-b, b, 10_000)
    assert pot.kappa_default >= np.max(np.abs(pot.f_prime(sample)))
    xi = rng.uniform(-b, b, 10_000)
    k = pot.kappa_default
    assert np.max(np.abs(pot.f(xi) + k * xi)) <= k * b + 1e-12


def test_e1h_examples(rng):
    spec = GridSpec(1.0, 8)
    assert DW.e1h(spec, spec.full(1.0)) == 0.0
    assert DW.e1h(spec, spec.zeros()) == pytest.approx(0.25, rel=1e-15)
    u = rng.uniform(-0.8, 0.8, spec.shape)
    for pot in (DW, FH):
        assert pot.e1h(spec, u) == pytest.approx(naive_e1h(pot, spec, u), rel=1e-14)


def test_e1h_domain_error_propagates():
    spec = GridSpec(1.0, 4)
    u = spec.zeros()
    u[1, 2] = -1.0
    with pytest.raises(PotentialDomainError):
        FH.e1h(spec, u)


def test_zero_potential():
    z = Potential("zero")
    assert z.beta == 1.0 and z.kappa_default == 0.0
    assert not np.any(z.f(np.linspace(-2, 2, 5)))
