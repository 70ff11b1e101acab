"""Unconditional and conditional (Wiener-filtered) covariances.

Covariances are expressed in internal units (``hbar = m = omega_m = 1``) over
the state ``(x, p, a1, a2)``.  The unconditional covariance integrates the
spectra; the conditional covariance integrates the spectra of the estimation
errors ``o - K_o * Y_zeta`` obtained with the causal Wiener filter.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    OBSERVABLES,
    QuadratureSpectra,
    SpectraSet,
    build_spectra,
    build_transfers,
    cross_spectrum,
    quadrature_spectra,
    stability,
)
from .errors import StationarityError
from .model import ReducedParams
from .ratcalc import (
    RationalFunction,
    SpectralFactors,
    causal_part,
    integrate_halfline,
    PointwiseAnalytic,
    partial_fractions_at,
    spectral_factorize,
)


class DegenerateNoiseWarning(UserWarning):
    """Raised when no noise drives the oscillator (zero variances by construction)."""


def occupation(vxx, vpp):
    """Mean phonon number ``(V_pp + V_xx) / 2 - 1/2`` in internal units."""
    return 0.5 * (vpp + vxx) - 0.5


def uncertainty_product(vxx, vpp, vxp):
    """``U = 2 sqrt(V_xx V_pp - V_xp**2)``; equal to one for a pure state."""
    det = vxx * vpp - vxp * vxp
    return 2.0 * math.sqrt(max(det, 0.0))


@dataclass(frozen=True)
class CovResult:
    """Covariance matrix and the scalars derived from its oscillator block.

    Attributes
    ----------
    v : numpy.ndarray
        Symmetric covariance over ``(x, p)`` or ``(x, p, a1, a2)``.
    n : float
        Occupation number.
    n_eff : float
        Effective occupation ``(U - 1) / 2``.
    u : float
        Uncertainty product.
    stable : bool
        Whether the underlying dynamics are stable.
    notes : tuple of str
        Structured warnings attached to the result.
    """

    v: np.ndarray
    n: float
    n_eff: float
    u: float
    stable: bool = True
    notes: tuple = field(default=())

    @classmethod
    def from_matrix(cls, v, stable=True, notes=()):
        v = np.asarray(v, dtype=float)
        v = 0.5 * (v + v.T)
        u = uncertainty_product(v[0, 0], v[1, 1], v[0, 1])
        return cls(v=v, n=occupation(v[0, 0], v[1, 1]), n_eff=0.5 * (u - 1.0), u=u,
                   stable=stable, notes=tuple(notes))

    @property
    def oscillator(self):
        return self.v[:2, :2]


def _require_stable(ss_or_ts):
    if not stability(ss_or_ts):
        raise StationarityError("dynamics are not strictly stable; variances undefined")


def _cov_from_transfers(tv, method="residue"):
    """Covariance matrix ``Re int_0^inf S_AB`` from per-channel transfer vectors."""
    n = len(tv)
    v = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            s = cross_spectrum(tv[i], tv[j])
            v[i, j] = v[j, i] = integrate_halfline(s, method=method)
    return v


def unconditional_cov(ss: SpectraSet, ts=None) -> CovResult:
    """Steady-state covariance of ``(x, p, a1, a2)`` from the spectra.

    Parameters
    ----------
    ss : SpectraSet
        Spectra of the parameter point.
    ts : TransferSet, optional
        If given, stability is checked and a :class:`StationarityError` is raised
        for unstable dynamics.
    """
    if ts is not None:
        _require_stable(ts)
    nt = ss.transfers
    v = _cov_from_transfers([nt[o] for o in OBSERVABLES])
    notes = []
    if np.all(v[:2, :2] == 0.0):
        msg = ("no noise drives the oscillator: the white thermal bath omits "
               "zero-point fluctuations, so N = -1/2 is a model artifact")
        warnings.warn(msg, DegenerateNoiseWarning, stacklevel=2)
        notes.append("degenerate-noise")
    return CovResult.from_matrix(v, notes=notes)


@dataclass(frozen=True)
class WienerSolution:
    """Causal Wiener filters for ``x, p, a1, a2`` given ``Y_zeta``.

    Attributes
    ----------
    psi : SpectralFactors
        Factorization of the output spectrum.
    g : dict
        ``G_o = [S_oY / psi_minus]_+``.
    k : dict
        Filters ``K_o = G_o / psi_plus``.
    zeta : float
        Measured quadrature angle.
    quad : QuadratureSpectra
        Spectra of the measured quadrature.
    """

    psi: SpectralFactors
    g: dict
    k: dict
    zeta: float
    quad: QuadratureSpectra


def wiener(quad: QuadratureSpectra, zeta: float, grid_scale=None) -> WienerSolution:
    """Wiener-Hopf solution for all four observables.

    Parameters
    ----------
    quad : QuadratureSpectra
        Output of :func:`optomech.dynamics.quadrature_spectra`.
    zeta : float
        Measured quadrature angle (recorded on the solution).
    grid_scale : float, optional
        Frequency scale of the positivity check before factorization, usually
        ``max(1, gamma, |Delta|)``.
    """
    evaluator = None
    if quad.ty is not None:
        def evaluator(z):
            return sum(t(z) * np.conj(t(np.conj(z))) for t in quad.ty if not t.is_zero)
    psi = spectral_factorize(quad.s_yy, grid_scale=grid_scale, evaluator=evaluator, even=True)
    inv_minus = psi.psi_minus.reciprocal()
    inv_plus = psi.psi_plus.reciprocal()
    g, k = {}, {}
    for o in OBSERVABLES:
        s_oy = quad.s_oy(o)
        if s_oy.is_zero:
            g[o] = RationalFunction(0.0)
            k[o] = RationalFunction(0.0)
            continue
        g[o] = causal_part(s_oy * inv_minus)
        # The optimal filter's poles are the lower-half zeros of S_YY; the
        # poles of G cancel against zeros of 1/psi_plus.
        k[o] = partial_fractions_at([(1.0, [g[o], inv_plus])], psi.zeros_lower,
                                    const=g[o].limit_at_infinity() / psi.psi_plus.limit_at_infinity())
    return WienerSolution(psi=psi, g=g, k=k, zeta=zeta, quad=quad)


def _y_value(nt, zeta, z):
    vals = nt.values("y1", z), nt.values("y2", z)
    return np.sin(zeta) * vals[0] + np.cos(zeta) * vals[1]


def error_transfers(ss: SpectraSet, ws: WienerSolution):
    """Per-channel transfers of the estimation errors ``o - K_o Y_zeta``.

    The error of the optimal estimate evolves under the filter dynamics, so its
    poles are the lower-half zeros of ``S_YY``; all oscillator and cavity
    poles cancel.  Each error transfer is therefore assembled from its
    principal parts there, which never evaluates anything near the weakly
    damped mechanical poles.
    """
    nt = ss.transfers
    ty = nt.y_zeta(ws.zeta)
    poles = ws.psi.zeros_lower
    out = []
    for o in OBSERVABLES:
        k = ws.k[o]
        if k.is_zero:
            # nothing is learned about o (for example an uncoupled, hence
            # unobservable, oscillator): the error is o itself and keeps its
            # open-loop poles
            out.append(tuple(nt[o]))
            continue
        row = []
        for ch, (a, b) in enumerate(zip(nt[o], ty)):
            const = a.limit_at_infinity() - k.limit_at_infinity() * b.limit_at_infinity()
            yb = PointwiseAnalytic(lambda z, ch=ch: _y_value(nt, ws.zeta, z)[ch], b)
            row.append(partial_fractions_at([(1.0, [a]), (-1.0, [k, yb])], poles, const=const))
        out.append(tuple(row))
    return out


def conditional_cov(ss: SpectraSet, ws: WienerSolution, method="error") -> CovResult:
    """Conditional covariance of ``(x, p, a1, a2)`` under optimal filtering.

    Parameters
    ----------
    method : {"error", "difference"}
        ``"error"`` integrates the spectra of the estimation errors, which is
        numerically robust when the unconditional variances are large.
        ``"difference"`` integrates ``S_AB - G_A conj(G_B)`` literally.  The two
        are mathematically equal.
    """
    if method == "error":
        v = _cov_from_transfers(error_transfers(ss, ws))
    elif method == "difference":
        nt = ss.transfers
        n = len(OBSERVABLES)
        v = np.zeros((n, n))
        for i, a in enumerate(OBSERVABLES):
            for j in range(i, n):
                b = OBSERVABLES[j]
                s = cross_spectrum(nt[a], nt[b]) - ws.g[a] * ws.g[b].conj()
                v[i, j] = v[j, i] = integrate_halfline(s.cancel())
    else:
        raise ValueError(f"unknown method {method!r}")
    return CovResult.from_matrix(v)


@dataclass(frozen=True)
class PointSolution:
    """Everything computed for one parameter point."""

    rp: ReducedParams
    transfers: object
    spectra: SpectraSet
    uncond: CovResult
    wiener: WienerSolution = None
    cond: CovResult = None


def grid_scale(rp: ReducedParams):
    return max(1.0, rp.gamma, abs(rp.delta))


def solve_point(rp: ReducedParams, conditional=True) -> PointSolution:
    """Build transfers and spectra and compute the (conditional) covariances.

    Raises
    ------
    StationarityError
        If the dynamics at ``rp`` are not strictly stable.
    """
    ts = build_transfers(rp)
    _require_stable(ts)
    ss = build_spectra(rp, ts)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateNoiseWarning)
        unc = unconditional_cov(ss)
    if not conditional:
        return PointSolution(rp, ts, ss, unc)
    quad = quadrature_spectra(ss, rp.zeta)
    ws = wiener(quad, rp.zeta, grid_scale=grid_scale(rp))
    return PointSolution(rp, ts, ss, unc, ws, conditional_cov(ss, ws))


__all__ = [
    "CovResult",
    "DegenerateNoiseWarning",
    "PointSolution",
    "WienerSolution",
    "conditional_cov",
    "error_transfers",
    "occupation",
    "solve_point",
    "uncertainty_product",
    "unconditional_cov",
    "wiener",
]
