import math

import numpy as np
import pytest

from optomech.dynamics import (
    build_spectra,
    build_transfers,
    closed_form_spectra,
    quadrature_spectra,
    stability,
)
from optomech.model import ReducedParams
from optomech.oracle import build_state_space, lyapunov_steady
from optomech.ratcalc import RationalFunction, integrate_halfline

GRID = np.array([0.0, 0.13, 0.6, 0.97, 1.0, 1.4, 3.3, 11.0])


def close(f, g, w=GRID, rtol=1e-9):
    a, b = f(w), g(w)
    scale = np.max(np.abs(b)) + 1e-300
    np.testing.assert_allclose(a, b, rtol=0, atol=rtol * scale)


@pytest.fixture
def point():
    rp = ReducedParams(gamma=1.0, delta=-1.0, omega_q=0.5, omega_f=0.3, gamma_m=1e-3,
                       eta=0.7, zeta=0.4)
    ts = build_transfers(rp)
    return rp, ts, build_spectra(rp, ts)


class TestTransfers:
    def test_no_spring_on_resonance(self):
        ts = build_transfers(ReducedParams(gamma=1.0, delta=0.0, omega_q=0.5))
        assert ts.gamma_opt.is_zero

    def test_no_coupling(self):
        ts = build_transfers(ReducedParams(gamma=1.0, delta=-1.0, omega_q=0.0))
        close(ts.r_eff, ts.r_xx)

    def test_chi_at_zero(self):
        ts = build_transfers(ReducedParams(gamma=1.0, delta=0.0, omega_q=0.5))
        assert ts.chi(0.0) == pytest.approx(-1.0)

    def test_chi_poles(self):
        ts = build_transfers(ReducedParams(gamma=0.7, delta=-1.3, omega_q=0.5))
        np.testing.assert_allclose(np.sort_complex(ts.chi.poles()),
                                   np.sort_complex([1.3 - 0.7j, -1.3 - 0.7j]))

    def test_effective_response_identity(self, point):
        _, ts, _ = point
        inv = RationalFunction(1.0) / ts.r_xx - ts.gamma_opt
        close(lambda w: 1.0 / ts.r_eff(w), inv)

    def test_stability_examples(self):
        assert stability(build_transfers(ReducedParams(gamma=1.0, delta=0.0, omega_q=0.0)))
        assert stability(build_transfers(ReducedParams(gamma=1.0, delta=-1.0, omega_q=0.5,
                                                       gamma_m=1e-6)))
        assert not stability(build_transfers(ReducedParams(gamma=0.1, delta=1.0, omega_q=1.0,
                                                           gamma_m=1e-6)))

    def test_stability_matches_drift_eigenvalues(self):
        rp = ReducedParams(gamma=1.0, delta=-1.0, omega_q=0.5, gamma_m=1e-6)
        eig = np.linalg.eigvals(build_state_space(rp).drift)
        assert np.all(eig.real < 0)
        # state-space eigenvalues lam correspond to frequencies W = i lam
        poles = build_transfers(rp).r_eff.poles()
        for lam in eig:
            assert np.min(np.abs(poles - 1j * lam)) < 1e-9


class TestSpectra:
    def test_no_noise_no_motion(self):
        rp = ReducedParams(gamma=1.0, delta=-1.0, omega_q=0.0)
        ss = build_spectra(rp, build_transfers(rp))
        assert ss.s_ff_total.is_zero or np.allclose(ss.s_ff_total(GRID), 0.0)
        assert np.allclose(ss.s_xx(GRID), 0.0)

    def test_blind_detector(self):
        rp = ReducedParams(gamma=1.0, delta=-1.0, omega_q=0.5, omega_f=0.2, eta=0.0)
        ss = build_spectra(rp, build_transfers(rp))
        for i in range(2):
            for j in range(2):
                np.testing.assert_allclose(ss.s_yy[i][j](GRID), float(i == j), atol=1e-14)

    def test_xx_matches_lyapunov(self):
        rp = ReducedParams(gamma=1.0, delta=-1.0, omega_q=0.5, omega_f=0.0)
        ss = build_spectra(rp, build_transfers(rp))
        v = lyapunov_steady(build_state_space(rp))
        assert integrate_halfline(ss.s_xx) == pytest.approx(v[0, 0], rel=1e-8)

    def test_hermitian_symmetry(self, point):
        _, _, ss = point
        w = GRID[1:]
        for s in (ss.s_xx, ss.s_pp, ss.s_aa[0][0], ss.s_yy[1][1]):
            np.testing.assert_allclose(s(-w), s(w), rtol=1e-9)
            assert np.all(s(w).real >= -1e-12)
            np.testing.assert_allclose(s(w).imag, 0.0, atol=1e-12 * np.max(np.abs(s(w))))
        for s in (ss.s_xy[0], ss.s_ay[1][0], ss.s_ax[0]):
            np.testing.assert_allclose(s(-w), np.conj(s(w)), rtol=1e-9, atol=1e-14)

    def test_momentum_spectrum(self, point):
        _, _, ss = point
        close(ss.s_pp, lambda w: w ** 2 * ss.s_xx(w))

    def test_shot_noise_floor(self, point):
        rp, _, ss = point
        quad = quadrature_spectra(ss, rp.zeta)
        assert quad.s_yy(1e5).real == pytest.approx(1.0, rel=1e-6)

    @pytest.mark.parametrize("change", [dict(omega_q=0.0), dict(eta=0.0)])
    def test_back_action_correlation_vanishes(self, change):
        rp = ReducedParams(gamma=1.0, delta=-1.0, omega_q=0.5).replace(**change)
        cf = closed_form_spectra(rp, build_transfers(rp))
        assert np.allclose(cf["s_fy1"](GRID), 0.0) and np.allclose(cf["s_fy2"](GRID), 0.0)

    def test_response_times_force(self, point):
        _, ts, ss = point
        close(ss.s_xx, lambda w: np.abs(ts.r_eff(w)) ** 2 * ss.s_ff_total(w))

    def test_quadrature_projection(self, point):
        _, _, ss = point
        close(quadrature_spectra(ss, 0.0).s_yy, ss.s_yy[1][1])
        close(quadrature_spectra(ss, math.pi / 2).s_yy, ss.s_yy[0][0])
        z = 0.4
        s, c = math.sin(z), math.cos(z)
        expected = lambda w: (ss.s_yy[0][0](w) * s * s + ss.s_yy[1][1](w) * c * c  # noqa: E731
                              + (ss.s_yy[0][1](w) + ss.s_yy[1][0](w)).real * s * c)
        close(quadrature_spectra(ss, z).s_yy, expected)

    @pytest.mark.parametrize("rp", [
        ReducedParams(gamma=1.0, delta=-1.0, omega_q=0.5, omega_f=0.3, gamma_m=1e-3, eta=0.7),
        ReducedParams(gamma=0.4, delta=-2.0, omega_q=0.8, omega_f=0.0, gamma_m=1e-4, eta=1.0),
        ReducedParams(gamma=2.0, delta=0.0, omega_q=0.5, omega_f=0.1, eta=0.9),
    ])
    def test_closed_form_agrees_with_channel_sums(self, rp):
        ts = build_transfers(rp)
        ss = build_spectra(rp, ts)
        cf = closed_form_spectra(rp, ts)
        close(cf["s_ff_total"], ss.s_ff_total)
        close(cf["s_xx"], ss.s_xx)
        close(cf["s_fy1"], ss.s_fy1)
        close(cf["s_fy2"], ss.s_fy2)
        for i in range(2):
            close(cf["s_xy"][i], ss.s_xy[i])
            close(cf["s_py"][i], ss.s_py[i])
            close(cf["s_ax"][i], ss.s_ax[i])
            close(cf["s_ap"][i], ss.s_ap[i])
            for j in range(2):
                close(cf["s_yy"][i][j], ss.s_yy[i][j])
                close(cf["s_aa"][i][j], ss.s_aa[i][j])
                close(cf["s_ay"][i][j], ss.s_ay[i][j])

    def test_loss_force_noise(self):
        # the closed form covers the optical-loss force noise but not the loss
        # port's contribution to the cavity and output quadratures
        rp = ReducedParams(gamma=2.0, delta=-0.5, omega_q=0.5, gamma_eps=0.1, eta=0.9)
        ts = build_transfers(rp)
        ss = build_spectra(rp, ts)
        cf = closed_form_spectra(rp, ts)
        close(cf["s_ff_total"], ss.s_ff_total)
        close(cf["s_xx"], ss.s_xx)
        lossless = build_spectra(rp.replace(gamma_eps=0.0), ts)
        extra = lambda w: ss.s_ff_total(w) - lossless.s_ff_total(w)  # noqa: E731
        chi2 = lambda w: np.abs(ts.chi(w)) ** 2  # noqa: E731
        close(extra, lambda w: 4 * 0.5 ** 3 * 0.1 * chi2(w) * (4.0 + w ** 2 + 0.25))

    def test_outputs_depend_on_coupling_only_through_omega_q(self):
        # the same Omega_q reached from different (G0, hbar/m) splits is a single
        # ReducedParams value; check the output response scales as Omega_q**1.5
        base = ReducedParams(gamma=1.0, delta=-1.0, omega_q=0.5)
        r1 = build_transfers(base).r_y2f(0.7)
        r2 = build_transfers(base.replace(omega_q=0.5 * 4 ** (1 / 3))).r_y2f(0.7)
        assert r2 / r1 == pytest.approx(2.0)
