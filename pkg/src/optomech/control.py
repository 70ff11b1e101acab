"""Optimal feedback control of the oscillator from the measured quadrature.

The controller feeds back a force ``F_FB = C Y_zeta``.  Closing the loop gives

``x_ctrl = x + R_eff C Y_zeta / (1 - sqrt(eta) R_YF R_eff C)``

per noise channel, where ``x`` and ``Y_zeta`` are the open-loop transfers.
The optimal controller is derived from the Wiener filter of ``x`` by removing
a first-order kernel that carries the same initial value; the controlled
state then has ``U_ctrl = 2 [sqrt(V_xx V_pp) + |V_xp|]`` of the conditional
state.

Closed-loop transfers are evaluated pointwise from the building blocks and
turned into rational functions through their principal parts at the
closed-loop poles.  Open-loop oscillator poles, which may lie within
``1e-9`` of the real axis, cancel in the loop and are never used.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .dynamics import TransferSet, transfer_values
from .errors import ControllerSynthesisError, DomainError
from .estimator import CovResult, WienerSolution
from .model import ReducedParams
from .ratcalc import (
    Polynomial,
    RationalFunction,
    assemble_partial_fractions,
    _polish_zeros,
    integrate_halfline,
    partial_fractions_at,
    principal_parts_by_contour,
)

RATE_WARN = 1e6
LOOP_CHECK_TOL = 1e-7


class ControllerRateWarning(UserWarning):
    """The anchor rate ``sqrt(V_pp / V_xx)`` of the conditional state is extreme."""


def initial_value(g):
    """Time-domain value at ``t = 0+`` of a strictly proper causal transfer.

    With ``f(t) = int dW/2pi exp(-i W t) f(W)``, a sum of simple poles
    ``r / (W - p)`` in the lower half-plane gives ``f(0+) = -i sum r``, the
    limit of ``-i W f(W)`` at infinity.
    """
    if g.is_zero:
        return 0.0
    rd = g.relative_degree()
    if rd < 1:
        raise DomainError("kernel is not strictly proper; its initial value diverges")
    if rd > 1:
        return 0.0
    return complex(-1j * g.num.lead / g.den.lead)


@dataclass(frozen=True)
class ControlSolution:
    """Optimal controller and the resulting controlled state.

    Attributes
    ----------
    k_ctrl : RationalFunction
        Control kernel applied to ``Y_zeta``.
    c_opt : RationalFunction
        Feedback controller ``C`` with ``F_FB = C Y_zeta``.
    v_ctrl : numpy.ndarray
        2x2 covariance of ``(x_ctrl, p_ctrl)``.
    u_ctrl : float
        Uncertainty product of the controlled state.
    n_ctrl : float
        Occupation number of the controlled state.
    f_fb : tuple of RationalFunction
        Closed-loop feedback force ``C Y_zeta`` per noise channel.
    rate : float
        Anchor rate ``sqrt(V_pp / V_xx)`` of the conditional state.
    closed_loop_poles : numpy.ndarray
        Poles of the controlled transfers.
    """

    k_ctrl: RationalFunction
    c_opt: RationalFunction
    v_ctrl: np.ndarray
    u_ctrl: float
    n_ctrl: float
    f_fb: tuple
    rate: float
    closed_loop_poles: np.ndarray

    @staticmethod
    def predicted_u(cond: CovResult):
        """``2 [sqrt(V_xx V_pp) + |V_xp|]`` of the conditional state."""
        v = cond.v
        return 2.0 * (math.sqrt(v[0, 0] * v[1, 1]) + abs(v[0, 1]))


def control_kernel(ws: WienerSolution, cond: CovResult):
    """``K_ctrl = (G_x - G_x(0) / (w_c - i W)) / psi_plus`` with ``w_c = sqrt(V_pp/V_xx)``.

    ``G_x(0)`` is the initial value of the causal kernel of ``G_x``.

    Returns
    -------
    tuple
        ``(k_ctrl, w_c, poles)`` where ``poles`` are all poles of ``k_ctrl``.
    """
    vxx, vpp = cond.v[0, 0], cond.v[1, 1]
    if not vxx > 0:
        raise ControllerSynthesisError("conditional V_xx must be positive")
    rate = math.sqrt(vpp / vxx)
    if rate > RATE_WARN or rate < 1.0 / RATE_WARN:
        warnings.warn(f"controller anchor rate {rate:.3e} is extreme", ControllerRateWarning,
                      stacklevel=2)
    gx = ws.g["x"]
    g0 = initial_value(gx)
    # kernel g0 exp(-w_c t) has transfer g0 / (w_c - i W) = i g0 / (W + i w_c)
    anchor = RationalFunction(Polynomial([1j * g0]), Polynomial.from_roots([-1j * rate]))
    inv_plus = ws.psi.psi_plus.reciprocal()
    poles = np.concatenate([np.asarray(ws.psi.zeros_lower, dtype=complex), [-1j * rate]])
    k = partial_fractions_at([(1.0, [gx, inv_plus]), (-1.0, [anchor, inv_plus])], poles)
    return k, rate, poles


def controller(k_ctrl, ts: TransferSet, zeta, eta):
    """``C = -K_ctrl / (R_eff (1 - sqrt(eta) R_YF K_ctrl))`` as a rational function.

    The symbolic quotient cancels the open-loop oscillator poles and, at
    ``Delta = 0``, a double cavity pole.  Rounding splits such cancellations
    into nearby zero/pole pairs, so the reduced form is refined against the
    pointwise controller (see :func:`_refine_rational`).
    """
    if k_ctrl.is_zero:
        return RationalFunction(0.0)
    loop = RationalFunction(1.0) - (ts.r_yf(zeta) * k_ctrl) * math.sqrt(eta)
    c = (-(k_ctrl / (ts.r_eff * loop))).cancel()
    c_fun = controller_values(k_ctrl, ts, zeta, eta)
    scale = max(1.0, float(np.max(np.abs(c.den.roots()), initial=1.0)))
    probe = scale * np.array([0.0, 0.021, 0.13, 0.37, 0.71, 0.93, 1.07, 1.6, 2.9, 6.1, 17.0])
    return _refine_rational(c, c_fun, probe)


def _refine_rational(rf, func, probe, rounds=3, merge_tol=1e-8):
    """Polish zeros and poles of ``rf`` against an accurate evaluator ``func``.

    Zeros are refined on ``func`` and poles on ``1/func``; pairs that meet
    within ``merge_tol`` cancel, and the gain is refitted by least squares on
    ``probe``.  The refined function is returned only if it matches ``func``
    on ``probe`` better than ``rf`` does.
    """
    if rf.den.degree == 0 and rf.num.degree == 0:
        return rf
    zr = rf.num.roots() if rf.num.degree else np.zeros(0, dtype=complex)
    pr = rf.den.roots() if rf.den.degree else np.zeros(0, dtype=complex)
    lead = rf.num.lead / rf.den.lead
    with np.errstate(divide="ignore", invalid="ignore"):
        for _ in range(rounds):
            zr = _polish_zeros(zr, pr, lead, lambda z: func(z)[0], iters=20)
            pr = _polish_zeros(pr, zr, 1.0 / lead, lambda z: 1.0 / func(z)[0], iters=20)
    keep_z = np.ones(zr.size, dtype=bool)
    keep_p = np.ones(pr.size, dtype=bool)
    for i, z in enumerate(zr):
        d = np.where(keep_p, np.abs(pr - z), np.inf)
        if d.size and np.min(d) <= merge_tol * max(1.0, abs(z)):
            keep_p[np.argmin(d)] = False
            keep_z[i] = False
    monic = RationalFunction(Polynomial.from_roots(zr[keep_z]), Polynomial.from_roots(pr[keep_p]))
    target = func(probe)
    basis = monic(probe)
    gain = np.vdot(basis, target) / np.vdot(basis, basis)
    refined = RationalFunction(Polynomial.from_roots(zr[keep_z], gain),
                               Polynomial.from_roots(pr[keep_p]))

    def err(f):
        return float(np.max(np.abs(f(probe) - target) / np.abs(target)))

    return refined if err(refined) < err(rf) else rf


def controller_values(k_ctrl, ts: TransferSet, zeta, eta):
    """Pointwise ``C(W)`` built from ``K_ctrl``, ``R_eff`` and ``R_YF``."""
    r_yf = ts.r_yf(zeta)
    sq = math.sqrt(eta)

    def c(w):
        at = np.atleast_1d(np.asarray(w, dtype=complex))
        k = k_ctrl(at)
        return -k / (ts.r_eff(at) * (1.0 - sq * r_yf(at) * k))

    return c


def closed_loop_values(rp: ReducedParams, ts: TransferSet, kappa, zeta, w):
    """Closed-loop ``x``, ``p`` and feedback force per channel at frequency ``w``.

    Parameters
    ----------
    kappa : callable
        ``R_eff(W) C(W)``, the displacement produced per unit of ``Y_zeta``.
        Passing the product avoids dividing by the large resonant response.
    w : complex or array_like
        Frequency or 1-D array of frequencies; outputs have shape ``(7,)`` or
        ``(7, n)`` accordingly.
    """
    vals = transfer_values(rp, ts, w)
    y = math.sin(zeta) * vals["y1"] + math.cos(zeta) * vals["y2"]
    at = np.atleast_1d(np.asarray(w, dtype=complex))
    kap = np.atleast_1d(kappa(at))
    r_yf = ts.r_yf(zeta)(at)
    reff = ts.r_eff(at)
    if np.ndim(w) == 0:
        kap, r_yf, reff = kap[0], r_yf[0], reff[0]
    y_cl = y / (1.0 - math.sqrt(rp.eta) * r_yf * kap)
    x = vals["x"] + kap * y_cl
    return x, -1j * np.asarray(w) * x, kap * y_cl / reff


def _open_loop_points(ts: TransferSet):
    return np.concatenate([ts.r_eff.den.roots(), ts.chi.den.roots()])


def closed_loop_transfers(rp, ts, kappa, zeta, poles, avoid=(), check_points=None):
    """Rational closed-loop transfers assembled from contour principal parts.

    Parameters
    ----------
    poles : array_like
        Closed-loop poles.
    avoid : array_like
        Points the contours keep away from (open-loop poles whose cancellation
        makes pointwise values inaccurate nearby).
    check_points : array_like, optional
        Real frequencies at which the assembled transfers are compared to the
        pointwise closed loop; a mismatch means the loop has poles outside
        ``poles`` and raises :class:`ControllerSynthesisError`.

    Returns
    -------
    tuple
        ``(xs, ps, fs)``, each a tuple of seven rational functions.
    """
    def stacked(w):
        x, p, f = closed_loop_values(rp, ts, kappa, zeta, w)
        return np.concatenate([x, p, f])

    parts = principal_parts_by_contour(stacked, poles, avoid=avoid)
    nch = 7
    # x_ctrl decays like W**-2 (both x and R_eff C do), so x and p vanish at infinity
    big = 1e6 * max(1.0, float(np.max(np.abs(poles))))
    f_inf = closed_loop_values(rp, ts, kappa, zeta, big)[2]
    out = []
    for block, const in ((slice(0, nch), np.zeros(nch)),
                         (slice(nch, 2 * nch), np.zeros(nch)),
                         (slice(2 * nch, 3 * nch), f_inf)):
        fns = []
        for ch in range(nch):
            idx = np.arange(3 * nch)[block][ch]
            pp = [(z, c[:, idx]) for z, c in parts]
            fns.append(assemble_partial_fractions(pp, const=complex(const[ch])))
        out.append(tuple(fns))
    xs, ps, fs = out
    if check_points is not None:
        for w in check_points:
            want = closed_loop_values(rp, ts, kappa, zeta, w)[0]
            got = np.array([x(np.array([w]))[0] for x in xs])
            scale = max(float(np.max(np.abs(want))), 1e-300)
            if np.max(np.abs(got - want)) > LOOP_CHECK_TOL * scale:
                raise ControllerSynthesisError(
                    "closed-loop transfer disagrees with its pole expansion; the loop has "
                    "poles outside the expected stable set"
                )
    return xs, ps, fs


def _cov2(xs, ps):
    def integ(u, v):
        acc = RationalFunction(0.0)
        for a, b in zip(u, v):
            if a.is_zero or b.is_zero:
                continue
            acc = acc + a * b.conj()
        return integrate_halfline(acc) if not acc.is_zero else 0.0

    vxx, vpp, vxp = integ(xs, xs), integ(ps, ps), integ(xs, ps)
    return np.array([[vxx, vxp], [vxp, vpp]])


def optimal_controller(rp: ReducedParams, ws: WienerSolution, cond: CovResult,
                       ts: TransferSet) -> ControlSolution:
    """Synthesize the optimal controller and evaluate the controlled state.

    The closed-loop poles are the lower-half zeros of ``S_YY`` and ``-i w_c``.
    The closed loop is rebuilt from ``C`` and checked against that pole set
    at several real frequencies.

    Raises
    ------
    ControllerSynthesisError
        If the closed loop is not stable or the conditional ``V_xx`` vanishes.
    """
    k, rate, poles = control_kernel(ws, cond)
    if np.any(poles.imag >= 0):
        raise ControllerSynthesisError("closed loop has a pole outside the lower half-plane")
    c_fun = controller_values(k, ts, ws.zeta, rp.eta)

    def kappa(w):
        return ts.r_eff(w) * c_fun(w)

    scale = max(1.0, rp.gamma, abs(rp.delta))
    checks = scale * np.array([0.137, 0.71, 2.3, 7.9])
    xs, ps, fs = closed_loop_transfers(rp, ts, kappa, ws.zeta, poles,
                                       avoid=_open_loop_points(ts), check_points=checks)
    v = _cov2(xs, ps)
    u = 2.0 * math.sqrt(max(v[0, 0] * v[1, 1] - v[0, 1] ** 2, 0.0))
    n = 0.5 * (v[0, 0] + v[1, 1]) - 0.5
    return ControlSolution(k_ctrl=k, c_opt=controller(k, ts, ws.zeta, rp.eta), v_ctrl=v,
                           u_ctrl=u, n_ctrl=n, f_fb=fs, rate=rate, closed_loop_poles=poles)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(48)


def _adaptive_gl(f, a, b, tol, depth=0):
    """Adaptive Gauss-Legendre integral of a vectorized ``f`` returning ``(m, n)``."""
    def rule(lo, hi):
        half, mid = 0.5 * (hi - lo), 0.5 * (hi + lo)
        return half * (f(mid + half * _GL_NODES) @ _GL_WEIGHTS)

    whole = rule(a, b)
    m = 0.5 * (a + b)
    split = rule(a, m) + rule(m, b)
    err = np.max(np.abs(split - whole))
    if err <= tol * max(np.max(np.abs(split)), 1e-300) or depth >= 40:
        return split
    return _adaptive_gl(f, a, m, tol, depth + 1) + _adaptive_gl(f, m, b, tol, depth + 1)


def controlled_cov_pointwise(rp: ReducedParams, ts: TransferSet, kappa, zeta, tol=1e-12):
    """Controlled ``(x, p)`` covariance by quadrature of the pointwise closed loop.

    Used for controllers whose closed-loop poles are not known in closed
    form, such as perturbations of the optimum.  The half-line is split at
    the frequency scales of the system and the tail is mapped onto a finite
    interval with ``W = top / t``.

    Parameters
    ----------
    kappa : callable
        ``R_eff(W) C(W)`` of the controller.
    """
    def dens(w):
        x, p, _ = closed_loop_values(rp, ts, kappa, zeta, np.asarray(w, dtype=float))
        return np.array([np.sum(np.abs(x) ** 2, axis=0), np.sum(np.abs(p) ** 2, axis=0),
                         np.real(np.sum(x * np.conj(p), axis=0))])

    scale = max(1.0, rp.gamma, abs(rp.delta))
    top = 20.0 * scale
    grid = sorted({0.0, 0.5, 0.9, 1.0, 1.1, 2.0, scale, 3 * scale, top})
    total = np.zeros(3)
    for a, b in zip(grid[:-1], grid[1:]):
        total += _adaptive_gl(dens, a, b, tol)

    def tail(t):
        return dens(top / t) * (top / t ** 2)

    total += _adaptive_gl(tail, 0.0, 1.0, tol)
    total /= 2.0 * math.pi
    return np.array([[total[0], total[2]], [total[2], total[1]]])


def perturbation_family(rates=(0.3, 1.0, 3.0)):
    """Stable real kernels ``h`` for probing optimality.

    For each rate ``r`` the family has the low-pass ``r / (r - i W)`` and the
    high-pass ``-i W / (r - i W)``, both with their pole at ``-i r``.
    """
    out = []
    for r in rates:
        den = Polynomial.from_roots([-1j * r])
        out.append(RationalFunction(Polynomial([1j * r]), den))
        out.append(RationalFunction(Polynomial([0.0, 1.0]), den))
    return out


def perturbed_kappa(k_ctrl, ts, zeta, eta, h, delta):
    """``R_eff C`` for the controller ``C_opt (1 + delta h)``."""
    c_fun = controller_values(k_ctrl, ts, zeta, eta)

    def kappa(w):
        w = np.atleast_1d(np.asarray(w, dtype=complex))
        return ts.r_eff(w) * c_fun(w) * (1.0 + delta * h(w))

    return kappa


__all__ = [
    "ControlSolution",
    "ControllerRateWarning",
    "closed_loop_transfers",
    "closed_loop_values",
    "control_kernel",
    "controlled_cov_pointwise",
    "controller",
    "controller_values",
    "initial_value",
    "optimal_controller",
    "perturbation_family",
    "perturbed_kappa",
]
