"""Transfer functions and spectral densities of the linearized system.

The oscillator position ``x``, momentum ``p`` and the cavity quadratures
``a1`` (amplitude) and ``a2`` (phase) are driven by seven independent white
noise channels, each with unit single-sided symmetrized spectrum:

``v1, v2``
    vacuum entering through the input mirror,
``n1, n2``
    vacuum admitted by imperfect detection,
``xi``
    thermal force (spectrum ``2 Omega_F**2``, carried by the transfer),
``u1, u2``
    vacuum entering through the optical loss port.

Every observable is stored as a vector of rational transfer functions, one
per channel; spectra are then ``S_AB = sum_k T_Ak conj(T_Bk)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import ReducedParams
from .ratcalc import Polynomial, RationalFunction

CHANNELS = ("v1", "v2", "n1", "n2", "xi", "u1", "u2")
OBSERVABLES = ("x", "p", "a1", "a2")
STABILITY_TOL = 1e-13


@dataclass(frozen=True)
class TransferSet:
    """Susceptibilities of the coupled system.

    Attributes
    ----------
    chi : RationalFunction
        Cavity susceptibility ``1 / ((W + Delta + i gamma)(W - Delta + i gamma))``.
    r_xx : RationalFunction
        Bare mechanical response ``-1 / (W**2 + 2 i gamma_m W - 1)``.
    gamma_opt : RationalFunction
        Optical spring ``2 Omega_q**3 Delta chi``.
    r_eff : RationalFunction
        Effective response ``1 / (1/r_xx - gamma_opt)``.
    r_y1f, r_y2f : RationalFunction
        Output responses of the amplitude and phase quadratures to a force.
    """

    chi: RationalFunction
    r_xx: RationalFunction
    gamma_opt: RationalFunction
    r_eff: RationalFunction
    r_y1f: RationalFunction
    r_y2f: RationalFunction

    def r_yf(self, zeta):
        """Force response of the measured quadrature ``sin(zeta) Y1 + cos(zeta) Y2``."""
        return _combine(self.r_y1f, self.r_y2f, zeta)


def _combine(f1, f2, zeta):
    s, c = np.sin(zeta), np.cos(zeta)
    return (f1 * s + f2 * c).cancel()


def build_transfers(rp: ReducedParams) -> TransferSet:
    """Construct the susceptibilities for the parameter point ``rp``."""
    g, d = rp.gamma, rp.delta
    G = rp.coupling
    q = Polynomial.from_roots([-d - 1j * g, d - 1j * g])
    chi = RationalFunction(Polynomial([1.0]), q)
    wd = np.sqrt(complex(1.0 - rp.gamma_m ** 2))
    mech = Polynomial.from_roots([wd - 1j * rp.gamma_m, -wd - 1j * rp.gamma_m])
    r_xx = RationalFunction(Polynomial([-1.0]), mech)
    gamma_opt = chi * (2.0 * rp.omega_q ** 3 * d)
    # 1/r_eff = -(W^2 + 2 i gamma_m W - 1) - 2 Omega_q^3 Delta chi = -P / q
    r_eff = RationalFunction(-q, _response_denominator(mech, q, 2.0 * rp.omega_q ** 3 * d))
    gmi = RationalFunction(Polynomial([g, -1j]))  # gamma - i W
    r_y1f = chi * (-2.0 * np.sqrt(g) * G * d)
    r_y2f = (chi * gmi) * (2.0 * np.sqrt(g) * G)
    return TransferSet(chi, r_xx, gamma_opt, r_eff, r_y1f, r_y2f)


def _response_denominator(mech, q, spring):
    """Roots of ``mech * q + spring`` polished against the factored form.

    Evaluating the product form keeps relative accuracy near roots that sit
    very close to a mechanical pole, where the expanded coefficients would
    only resolve the damping rate to about ``1e-16`` absolute.
    """
    if spring == 0:
        return mech * q
    start = (mech * q + Polynomial([spring])).roots()
    fm, fq = mech.roots(), q.roots()

    def f(z):
        return np.prod(z - fm) * np.prod(z - fq) + spring

    def df(z):
        a, b = z - fm, z - fq
        return (a[0] + a[1]) * b[0] * b[1] + a[0] * a[1] * (b[0] + b[1])

    out = []
    for z in start:
        for _ in range(4):
            dz = df(z)
            if dz == 0:
                break
            step = f(z) / dz
            if abs(f(z - step)) >= abs(f(z)):
                break
            z = z - step
        out.append(z)
    return Polynomial.from_roots(np.array(out), 1.0)


def stability(ts: TransferSet) -> bool:
    """True iff every pole of ``r_eff`` lies strictly in the lower half-plane."""
    poles = ts.r_eff.den.roots()
    return bool(np.all(poles.imag < -STABILITY_TOL * np.maximum(1.0, np.abs(poles))))


def stability_margin(ts: TransferSet) -> float:
    """``-max Im(pole)`` over the poles of ``r_eff`` (positive when stable)."""
    return float(-np.max(ts.r_eff.den.roots().imag))


@dataclass(frozen=True)
class NoiseTransfers:
    """Open-loop transfer vectors from the seven noise channels.

    ``t[name]`` is a tuple of :class:`RationalFunction`, one per entry of
    :data:`CHANNELS`, for ``name`` in ``x, p, a1, a2, y1, y2, f_ba, y1_vac,
    y2_vac``.  ``f_ba`` is the radiation-pressure force and ``y*_vac`` the
    output quadratures with the oscillator contribution removed.
    """

    t: dict
    eta: float
    rp: ReducedParams = field(default=None, repr=False)
    ts: "TransferSet" = field(default=None, repr=False)

    def __getitem__(self, name):
        return self.t[name]

    def values(self, name, z):
        """Channel values of ``name`` at a complex frequency, from factored forms.

        Summing expanded numerators loses relative accuracy near their zeros;
        this evaluates the building blocks pointwise and combines the numbers.
        """
        return transfer_values(self.rp, self.ts, z)[name]

    def y_zeta(self, zeta):
        s, c = np.sin(zeta), np.cos(zeta)
        return tuple((a * s + b * c).cancel() for a, b in zip(self.t["y1"], self.t["y2"]))


def _unit(k):
    return tuple(RationalFunction(1.0 if j == k else 0.0) for j in range(len(CHANNELS)))


def _scaled(vec, f):
    return tuple((v * f) for v in vec)


def _add(*vecs):
    out = []
    for items in zip(*vecs):
        acc = items[0]
        for it in items[1:]:
            acc = acc + it
        out.append(acc.cancel())
    return tuple(out)


def noise_transfers(rp: ReducedParams, ts: TransferSet) -> NoiseTransfers:
    """Propagate every noise channel through the linearized equations.

    The cavity quadratures obey ``-i W a1 = -gamma a1 - Delta a2 + inputs`` and
    ``-i W a2 = Delta a1 - gamma a2 - sqrt(2) G x + inputs``, the oscillator
    ``x = r_eff (F_ba + xi)``, and the detected quadratures
    ``Y = sqrt(eta) (-v + sqrt(2 gamma) a) + sqrt(1 - eta) n``.
    """
    g, d, G = rp.gamma, rp.delta, rp.coupling
    chi = ts.chi
    gmi = RationalFunction(Polynomial([g, -1j]))  # gamma - i W
    rt2g, rt2e = np.sqrt(2 * g), np.sqrt(2 * rp.gamma_eps)
    ev = [_unit(k) for k in range(len(CHANNELS))]
    v1, v2, n1, n2, xi, u1, u2 = ev
    # input field quadratures reaching the cavity: c1 = rt2g v1 + rt2e u1, etc.
    c1 = _add(_scaled(v1, rt2g), _scaled(u1, rt2e))
    c2 = _add(_scaled(v2, rt2g), _scaled(u2, rt2e))
    # free cavity response: a1 = chi [(-gamma + i W) c1 + Delta c2], a2 = chi [-Delta c1 - (gamma - i W) c2]
    a1_free = _add(_scaled(c1, -(chi * gmi)), _scaled(c2, chi * d))
    a2_free = _add(_scaled(c2, -(chi * gmi)), _scaled(c1, chi * (-d)))
    # radiation-pressure force -sqrt(2) G a1_free
    f_ba = _scaled(a1_free, -np.sqrt(2) * G)
    f_ba = tuple(f.cancel() for f in f_ba)
    force = _add(f_ba, _scaled(xi, np.sqrt(2) * rp.omega_f))
    x = tuple((f * ts.r_eff).cancel() for f in force)
    W = RationalFunction.omega()
    p = tuple((xx * (-1j * W)).cancel() for xx in x)
    a1 = _add(a1_free, _scaled(x, chi * (-np.sqrt(2) * G * d)))
    a2 = _add(a2_free, _scaled(x, (chi * gmi) * (np.sqrt(2) * G)))
    se, sl = np.sqrt(rp.eta), np.sqrt(1.0 - rp.eta)
    y1 = _add(_scaled(v1, -se), _scaled(a1, se * rt2g), _scaled(n1, sl))
    y2 = _add(_scaled(v2, -se), _scaled(a2, se * rt2g), _scaled(n2, sl))
    y1_vac = _add(_scaled(v1, -se), _scaled(a1_free, se * rt2g), _scaled(n1, sl))
    y2_vac = _add(_scaled(v2, -se), _scaled(a2_free, se * rt2g), _scaled(n2, sl))
    t = dict(x=x, p=p, a1=a1, a2=a2, y1=y1, y2=y2, f_ba=f_ba, y1_vac=y1_vac, y2_vac=y2_vac)
    return NoiseTransfers(t=t, eta=rp.eta, rp=rp, ts=ts)


def transfer_values(rp: ReducedParams, ts: TransferSet, z) -> dict:
    """Pointwise counterpart of :func:`noise_transfers`.

    Parameters
    ----------
    z : complex or array_like
        Frequency or 1-D array of frequencies.

    Returns
    -------
    dict
        Arrays of shape ``(7,)`` for scalar ``z`` or ``(7, n)`` for an array,
        keyed like :class:`NoiseTransfers`.
    """
    g, d, G = rp.gamma, rp.delta, rp.coupling
    scalar = np.ndim(z) == 0
    at = np.atleast_1d(np.asarray(z, dtype=complex))
    chi = ts.chi(at)
    r_eff = ts.r_eff(at)
    gmi = g - 1j * at
    rt2g, rt2e = np.sqrt(2 * g), np.sqrt(2 * rp.gamma_eps)
    e = np.eye(len(CHANNELS), dtype=complex)[:, :, None]
    v1, v2, n1, n2, xi, u1, u2 = e
    c1 = rt2g * v1 + rt2e * u1
    c2 = rt2g * v2 + rt2e * u2
    a1_free = -chi * gmi * c1 + chi * d * c2
    a2_free = -chi * gmi * c2 - chi * d * c1
    f_ba = -np.sqrt(2) * G * a1_free
    x = r_eff * (f_ba + np.sqrt(2) * rp.omega_f * xi)
    p = -1j * at * x
    a1 = a1_free - chi * np.sqrt(2) * G * d * x
    a2 = a2_free + chi * gmi * np.sqrt(2) * G * x
    se, sl = np.sqrt(rp.eta), np.sqrt(1.0 - rp.eta)
    y1 = -se * v1 + se * rt2g * a1 + sl * n1
    y2 = -se * v2 + se * rt2g * a2 + sl * n2
    y1_vac = -se * v1 + se * rt2g * a1_free + sl * n1
    y2_vac = -se * v2 + se * rt2g * a2_free + sl * n2
    out = dict(x=x, p=p, a1=a1, a2=a2, y1=y1, y2=y2, f_ba=f_ba, y1_vac=y1_vac, y2_vac=y2_vac)
    if scalar:
        out = {k: v[:, 0] for k, v in out.items()}
    return out


def cross_spectrum(ta, tb):
    """``S_AB = sum_k T_Ak conj(T_Bk)`` for two transfer vectors."""
    acc = RationalFunction(0.0)
    for a, b in zip(ta, tb):
        if a.is_zero or b.is_zero:
            continue
        acc = acc + a * b.conj()
    return acc


@dataclass(frozen=True)
class SpectraSet:
    """Single-sided symmetrized (cross-)spectral densities.

    Spectra are complex rational functions; their real parts on the real
    axis are the symmetrized spectra and diagonal entries are real.
    ``transfers`` keeps the per-channel transfer vectors they are built from.
    """

    s_xx: RationalFunction
    s_pp: RationalFunction
    s_xp: RationalFunction
    s_ff_total: RationalFunction
    s_aa: tuple
    s_ay: tuple
    s_ax: tuple
    s_ap: tuple
    s_fy1: RationalFunction
    s_fy2: RationalFunction
    s_yy: tuple
    s_xy: tuple
    s_py: tuple
    transfers: NoiseTransfers = field(repr=False)

    def cross(self, a, b):
        """Cross-spectrum between two named observables of :attr:`transfers`."""
        return cross_spectrum(self.transfers[a], self.transfers[b])


def build_spectra(rp: ReducedParams, ts: TransferSet) -> SpectraSet:
    """Assemble all spectra from the noise transfer vectors."""
    nt = noise_transfers(rp, ts)
    cs = lambda a, b: cross_spectrum(nt[a], nt[b])  # noqa: E731
    force = _add(nt["f_ba"], tuple(
        RationalFunction(np.sqrt(2) * rp.omega_f if k == CHANNELS.index("xi") else 0.0)
        for k in range(len(CHANNELS))
    ))
    s_aa = ((cs("a1", "a1"), cs("a1", "a2")), (cs("a2", "a1"), cs("a2", "a2")))
    s_ay = ((cs("a1", "y1"), cs("a1", "y2")), (cs("a2", "y1"), cs("a2", "y2")))
    s_yy = ((cs("y1", "y1"), cs("y1", "y2")), (cs("y2", "y1"), cs("y2", "y2")))
    return SpectraSet(
        s_xx=cs("x", "x"),
        s_pp=cs("p", "p"),
        s_xp=cs("x", "p"),
        s_ff_total=cross_spectrum(force, force),
        s_aa=s_aa,
        s_ay=s_ay,
        s_ax=(cs("a1", "x"), cs("a2", "x")),
        s_ap=(cs("a1", "p"), cs("a2", "p")),
        s_fy1=cs("f_ba", "y1_vac"),
        s_fy2=cs("f_ba", "y2_vac"),
        s_yy=s_yy,
        s_xy=(cs("x", "y1"), cs("x", "y2")),
        s_py=(cs("p", "y1"), cs("p", "y2")),
        transfers=nt,
    )


@dataclass(frozen=True)
class QuadratureSpectra:
    """Spectra involving the measured quadrature ``Y_zeta``."""

    s_yy: RationalFunction
    s_xy: RationalFunction
    s_py: RationalFunction
    s_a1y: RationalFunction
    s_a2y: RationalFunction
    ty: tuple = field(default=None, repr=False)

    def s_oy(self, o):
        return {"x": self.s_xy, "p": self.s_py, "a1": self.s_a1y, "a2": self.s_a2y}[o]


def quadrature_spectra(ss: SpectraSet, zeta: float) -> QuadratureSpectra:
    """Project output spectra onto ``Y_zeta = sin(zeta) Y1 + cos(zeta) Y2``.

    The auto-spectrum is ``S11 sin^2 + Re(S12) sin(2 zeta) + S22 cos^2``; the
    cross-spectra combine linearly.
    """
    s, c = np.sin(zeta), np.cos(zeta)
    y = ss.s_yy
    re12 = (y[0][1] + y[1][0]) * 0.5
    s_yy = y[0][0] * (s * s) + re12 * (2 * s * c) + y[1][1] * (c * c)
    lin = lambda pair: pair[0] * s + pair[1] * c  # noqa: E731
    return QuadratureSpectra(
        s_yy=s_yy,
        s_xy=lin(ss.s_xy),
        s_py=lin(ss.s_py),
        s_a1y=lin(ss.s_ay[0]),
        s_a2y=lin(ss.s_ay[1]),
        ty=ss.transfers.y_zeta(zeta),
    )


def closed_form_spectra(rp: ReducedParams, ts: TransferSet) -> dict:
    """Spectra from the closed-form expressions, for cross-checking.

    These formulas describe the lossless model (``gamma_eps = 0``) and are
    assembled from the susceptibilities rather than from noise transfers.
    The cavity spectra use the 2x2 matrices

    ``M0 = sqrt(2 gamma) chi [[-gamma + i W, Delta], [-Delta, -gamma + i W]]``,
    ``M1 = 2 sqrt(2) G**2 sqrt(gamma) chi**2 r_eff [[-Delta w, Delta**2], [w**2, -Delta w]]``,
    ``M2 = 2 G**2 |chi|**2 [[Delta**2, -Delta w*], [-Delta w, |w|**2]]``,
    ``M3 = [[Delta**2 - gamma**2 - W**2, 2 gamma Delta], [-2 gamma Delta, Delta**2 - gamma**2 - W**2]]``

    with ``w = gamma - i W``.  ``chi M3`` is the vacuum-to-output transfer and
    ``M1`` is the back-action path input -> force -> position -> cavity.
    The force/output-vacuum correlations ``s_fy*`` already carry one factor of
    ``sqrt(eta)``, so the output spectra attach only the remaining
    ``sqrt(eta)`` to them.
    """
    g, d, G, eta = rp.gamma, rp.delta, rp.coupling, rp.eta
    chi, R = ts.chi, ts.r_eff
    chic, Rc = chi.conj(), R.conj()
    W = RationalFunction.omega()
    w = RationalFunction(Polynomial([g, -1j]))
    wc = w.conj()
    abs_chi2 = chi * chic
    s_ff = (abs_chi2 * (W * W + (g * g + d * d)) * (4 * rp.omega_q ** 3 * g)
            + 2 * rp.omega_f ** 2).cancel()
    if rp.gamma_eps > 0:
        s_ff = (s_ff + abs_chi2 * (W * W + (g * g + d * d)) * (4 * rp.omega_q ** 3 * rp.gamma_eps)).cancel()
    s_xx = (R * Rc * s_ff).cancel()
    rt = np.sqrt(2 * g)
    gmw = RationalFunction(Polynomial([-g, 1j]))  # -gamma + i W
    M0 = [[chi * gmw * rt, chi * (rt * d)], [chi * (-rt * d), chi * gmw * rt]]
    pref = chi * chi * R * (2 * np.sqrt(2) * G ** 2 * np.sqrt(g))
    M1 = [[pref * w * (-d), pref * (d * d)], [pref * w * w, pref * w * (-d)]]
    p2 = abs_chi2 * (2 * G ** 2)
    M2 = [[p2 * (d * d), p2 * wc * (-d)], [p2 * w * (-d), p2 * w * wc]]
    m3d = RationalFunction(Polynomial([d * d - g * g, 0.0, -1.0]))
    M3 = [[chi * m3d, chi * (2 * g * d)], [chi * (-2 * g * d), chi * m3d]]

    def mm(A, B):  # A B^dagger
        return [[sum((A[i][k] * B[j][k].conj() for k in range(2)), RationalFunction(0.0))
                 for j in range(2)] for i in range(2)]

    def madd(*Ms):
        return [[sum((M[i][j] for M in Ms), RationalFunction(0.0)).cancel()
                 for j in range(2)] for i in range(2)]

    def mscale(M, f):
        return [[M[i][j] * f for j in range(2)] for i in range(2)]

    s_aa = madd(mm(M0, M0), mm(M0, M1), mm(M1, M0), mscale(M2, s_xx))
    s_ay = madd(mm(M0, M3), mm(M1, M3), mscale(mm(M0, M1), rt), mscale(M2, s_xx * rt))
    s_ay = [[f * np.sqrt(eta) for f in row] for row in s_ay]
    # S_{a x}: oscillator driven through M0 by the vacuum, plus the x -> a path
    vec = [RationalFunction(Polynomial([g, 1j])), RationalFunction(-d)]  # gamma + i W, -Delta
    base = chic * Rc * (2 * G * np.sqrt(g))
    s_ax = [
        (base * (M0[i][0] * vec[0] + M0[i][1] * vec[1])
         + chi * (np.sqrt(2) * G) * (RationalFunction(-d) if i == 0 else w) * s_xx).cancel()
        for i in range(2)
    ]
    pref_fy = 2 * np.sqrt(g * eta * rp.omega_q ** 3)
    s_fy1 = (chic * RationalFunction(Polynomial([g, 1j])) * pref_fy).cancel()
    s_fy2 = (chic * (pref_fy * d)).cancel()
    s_fy = [s_fy1, s_fy2]
    ryf = [ts.r_y1f, ts.r_y2f]
    s_yy = [[((RationalFunction(1.0) if i == j else RationalFunction(0.0))
              + ryf[i] * R * s_fy[j] * np.sqrt(eta)
              + (ryf[j] * R * s_fy[i]).conj() * np.sqrt(eta)
              + ryf[i] * ryf[j].conj() * s_xx * eta).cancel()
             for j in range(2)] for i in range(2)]
    s_xy = [(R * s_fy[i] + ryf[i].conj() * s_xx * np.sqrt(eta)).cancel()
            for i in range(2)]
    s_py = [(f * (-1j * W)).cancel() for f in s_xy]
    s_ap = [(f * (1j * W)).cancel() for f in s_ax]
    return dict(s_ff_total=s_ff, s_xx=s_xx, s_aa=s_aa, s_ay=s_ay, s_ax=s_ax, s_ap=s_ap,
                s_fy1=s_fy1, s_fy2=s_fy2, s_yy=s_yy, s_xy=s_xy, s_py=s_py)


__all__ = [
    "CHANNELS",
    "NoiseTransfers",
    "QuadratureSpectra",
    "SpectraSet",
    "TransferSet",
    "build_spectra",
    "build_transfers",
    "closed_form_spectra",
    "cross_spectrum",
    "noise_transfers",
    "quadrature_spectra",
    "stability",
    "stability_margin",
]
