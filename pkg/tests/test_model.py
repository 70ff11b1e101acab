import math

import pytest
from scipy import constants

from optomech.errors import ParameterError
from optomech.model import (
    PhysicalParams,
    ReducedParams,
    damping_from_quality,
    experimental_params,
    reduce,
)


def hand_reduce(p):
    """Independent evaluation of the coupling chain with CODATA constants."""
    hbar, c, kb = constants.hbar, constants.c, constants.k
    w0 = 2 * math.pi * c / p.laser_wavelength
    gamma = math.pi * c / (2 * p.cavity_length * p.finesse)
    a_in = math.sqrt(p.input_power / (hbar * w0))
    a = math.sqrt(2 * gamma) * a_in / abs(complex(gamma, -p.detuning))
    g0 = w0 / p.cavity_length * a
    omega_q = (hbar * g0 ** 2 / p.mass) ** (1 / 3)
    gm = p.mech_freq / (2 * p.quality)
    omega_f = math.sqrt(2 * gm * kb * p.temperature / hbar)
    return gamma / p.mech_freq, omega_q / p.mech_freq, omega_f / p.mech_freq


def test_experimental_bandwidth_and_coupling():
    rp = reduce(experimental_params())
    assert rp.gamma == pytest.approx(2.5, rel=0.05)
    assert rp.omega_q == pytest.approx(0.6, rel=0.10)
    assert rp.delta == pytest.approx(-1.0)
    assert rp.eta == 0.95


def test_reduce_matches_hand_chain():
    p = experimental_params(temperature=7.0)
    rp = reduce(p)
    gamma, omega_q, omega_f = hand_reduce(p)
    assert rp.gamma == pytest.approx(gamma, rel=1e-12)
    assert rp.omega_q == pytest.approx(omega_q, rel=1e-9)
    assert rp.omega_f == pytest.approx(omega_f, rel=1e-9)
    assert rp.gamma_eps == pytest.approx(constants.c * 10e-6 / (4 * 1e-2) / p.mech_freq)


def test_zero_power_and_temperature():
    rp = reduce(experimental_params(input_power=0.0, temperature=0.0))
    assert rp.omega_q == 0.0
    assert rp.omega_f == 0.0


def test_mass_power_scaling_invariance():
    a = reduce(experimental_params())
    b = reduce(experimental_params(mass=7e-6, input_power=21e-3))
    for name, va in a.as_dict().items():
        assert getattr(b, name) == pytest.approx(va, rel=1e-12)


def test_quality_convention():
    assert damping_from_quality(5e6) == pytest.approx(1e-7)


@pytest.mark.parametrize("bad", [
    dict(gamma=0.0, delta=0.0, omega_q=0.1),
    dict(gamma=1.0, delta=0.0, omega_q=-0.1),
    dict(gamma=1.0, delta=0.0, omega_q=0.1, eta=1.2),
    dict(gamma=1.0, delta=0.0, omega_q=0.1, gamma_m=0.0),
    dict(gamma=1.0, delta=float("nan"), omega_q=0.1),
])
def test_reduced_domain(bad):
    with pytest.raises(ParameterError):
        ReducedParams(**bad)


def test_physical_domain():
    with pytest.raises(ParameterError):
        experimental_params(mass=-1.0)
    with pytest.raises(ParameterError):
        experimental_params(round_trip_loss=1.0)
    with pytest.raises(ParameterError):
        experimental_params(temperature=-1.0)
    assert isinstance(experimental_params(), PhysicalParams)
