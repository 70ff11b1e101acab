import math

import numpy as np
import pytest
from scipy import linalg

from optomech.dynamics import CHANNELS
from optomech.errors import StationarityError
from optomech.model import ReducedParams
from optomech.oracle import (
    build_state_space,
    is_hurwitz,
    lyapunov_steady,
    random_draws,
    relative_deviation,
    riccati_residual,
    riccati_steady,
    validate,
)

RP = ReducedParams(gamma=1.0, delta=-1.0, omega_q=0.5, omega_f=0.3, gamma_m=1e-3,
                   eta=0.8, zeta=0.4)


def test_drift_matrix():
    m = build_state_space(RP)
    g = 0.5 ** 1.5
    expected = np.array([
        [0.0, 1.0, 0.0, 0.0],
        [-1.0, -2e-3, -math.sqrt(2) * g, 0.0],
        [0.0, 0.0, -1.0, 1.0],
        [-math.sqrt(2) * g, 0.0, -1.0, -1.0],
    ])
    np.testing.assert_allclose(m.drift, expected, atol=1e-15)
    assert m.noise_input.shape == (4, len(CHANNELS))


def test_measurement_noise_is_unit():
    # loss and vacuum channels together always give unit shot noise
    m = build_state_space(RP)
    assert m.r[0, 0] == pytest.approx(0.5)


def test_thermal_uncoupled_oscillator():
    # Omega_F**2 = 2 gamma_m n gives V_xx = V_pp = n / 2 with this force normalization
    n, gm = 40.0, 1e-3
    rp = ReducedParams(gamma=1.0, delta=0.0, omega_q=0.0, omega_f=math.sqrt(2 * gm * n), gamma_m=gm)
    v = lyapunov_steady(build_state_space(rp))
    assert v[0, 0] == pytest.approx(n / 2, rel=1e-3)
    assert v[1, 1] == pytest.approx(n / 2, rel=1e-12)
    # the cavity sits in its vacuum
    np.testing.assert_allclose(v[2:, 2:], 0.5 * np.eye(2), atol=1e-12)


def test_lyapunov_residual():
    m = build_state_space(RP)
    v = lyapunov_steady(m)
    res = m.drift @ v + v @ m.drift.T + m.q
    assert np.max(np.abs(res)) <= 1e-10 * np.max(np.abs(v))


def test_lyapunov_unstable():
    rp = ReducedParams(gamma=0.1, delta=1.0, omega_q=0.9)
    assert not is_hurwitz(build_state_space(rp).drift)
    with pytest.raises(StationarityError):
        lyapunov_steady(build_state_space(rp))


@pytest.mark.parametrize("rp", [
    RP,
    ReducedParams(gamma=2.0, delta=0.0, omega_q=0.5),
    ReducedParams(gamma=0.3, delta=-1.5, omega_q=0.7, omega_f=0.1, gamma_m=1e-4, zeta=math.pi / 4),
])
def test_riccati_against_scipy(rp):
    m = build_state_space(rp)
    p = riccati_steady(m)
    ref = linalg.solve_continuous_are(m.drift.T, m.measurement_row.T, m.q, m.r, s=m.n)
    assert relative_deviation(p, ref) <= 1e-8
    assert np.max(np.abs(riccati_residual(m, p))) <= 1e-10 * np.max(np.abs(p))
    # the filter error dynamics are stable
    gain = (p @ m.measurement_row.T + m.n) @ np.linalg.inv(m.r)
    assert is_hurwitz(m.drift - gain @ m.measurement_row)


def test_conditioning_reduces_covariance():
    m = build_state_space(RP)
    diff = lyapunov_steady(m) - riccati_steady(m)
    assert np.min(np.linalg.eigvalsh(diff)) >= -1e-12


def test_random_draws_reproducible():
    a = random_draws(6, seed=4)
    b = random_draws(6, seed=4)
    assert a == b
    assert [rp.eta for rp in a[:4]] == [0.5, 1.0, 0.5, 1.0]
    assert [rp.zeta for rp in a[:4]] == [0.0, 0.0, math.pi / 4, math.pi / 4]


def test_small_validate_run():
    results = validate(draws=4, seed=1)
    assert [r.name for r in results] == ["lyapunov-vs-spectra", "riccati-vs-wiener"]
    assert all(r.passed for r in results)
