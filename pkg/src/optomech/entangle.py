"""Oscillator-cavity entanglement from Gaussian covariance matrices.

The logarithmic negativity follows from the smallest symplectic eigenvalue of
the partially transposed covariance matrix.  Quadratures are normalized so
that the vacuum covariance is the identity and ``[x_n, p_n] = 2i``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import OptomechError, PhysicalityError, StationarityError
from .estimator import solve_point

PHYS_TOL = 1e-8
DISC_TOL = 1e-10


@dataclass(frozen=True)
class TwoModeCov:
    """Normalized two-mode covariance over ``(x_n, p_n, a1, a2)``.

    Attributes
    ----------
    v : numpy.ndarray
        4x4 symmetric matrix; the vacuum is the identity.
    """

    v: np.ndarray

    @property
    def a(self):
        """Oscillator block."""
        return self.v[:2, :2]

    @property
    def b(self):
        """Cavity block."""
        return self.v[2:, 2:]

    @property
    def c(self):
        """Oscillator-cavity cross block."""
        return self.v[:2, 2:]

    def min_physical_eigenvalue(self):
        """Smallest eigenvalue of ``v + i K``, with ``K`` the commutator matrix.

        Each mode contributes ``[[0, -i], [i, 0]]``, so ``v + i K`` is positive
        semidefinite for every physical state in this normalization.
        """
        j = np.array([[0.0, 1.0], [-1.0, 0.0]])
        omega = np.zeros((4, 4))
        omega[:2, :2] = j
        omega[2:, 2:] = j
        return float(np.min(np.linalg.eigvalsh(self.v + 1j * omega)))


@dataclass(frozen=True)
class EntanglementResult:
    """Partial-transpose symplectic eigenvalue and logarithmic negativity."""

    lam: float
    e_n: float
    entangled: bool
    notes: tuple = field(default=())


def normalize_cov(raw) -> TwoModeCov:
    """Scale internal-unit covariances of ``(x, p, a1, a2)`` to the vacuum-identity form.

    Every quadrature is multiplied by ``sqrt(2)``: the oscillator ground state
    ``V_xx = V_pp = 1/2`` and the unit-spectrum cavity vacuum both map to the
    identity.
    """
    v = np.asarray(raw, dtype=float)
    if v.shape != (4, 4):
        raise ValueError("expected a 4x4 covariance")
    v = 0.5 * (v + v.T)
    return TwoModeCov(2.0 * v)


def physicality_tolerance(rp, conditional):
    """Allowed uncertainty violation of the covariance computed at ``rp``.

    The thermal force is white and omits the zero-point share of the
    mechanical bath, while the damping ``gamma_m`` is kept, so states can
    undershoot the uncertainty bound slightly.  Restoring that share
    (``Omega_F**2 -> Omega_F**2 + 2 gamma_m``, which puts an undamped-limit
    ground state at ``V_pp = 1/2``) changes the normalized covariance by
    ``dV``; by Weyl's inequality no eigenvalue of ``V + i K`` moves by more
    than ``||dV||_2``.  Twice that norm is added to :data:`PHYS_TOL`.
    """
    zp = replace(rp, omega_f=math.sqrt(rp.omega_f ** 2 + 2.0 * rp.gamma_m))
    a, b = solve_point(rp, conditional), solve_point(zp, conditional)
    if conditional:
        dv = b.cond.v - a.cond.v
    else:
        dv = b.uncond.v - a.uncond.v
    return PHYS_TOL + 2.0 * float(np.linalg.norm(2.0 * dv, 2))


def checked_log_negativity(rp, v, conditional):
    """:func:`log_negativity` of the raw covariance ``v`` computed at ``rp``.

    The plain physicality check is tried first; only if it fails is the
    allowance of :func:`physicality_tolerance` computed and applied.
    """
    tc = normalize_cov(v)
    try:
        return log_negativity(tc)
    except PhysicalityError:
        res = log_negativity(tc, tol=physicality_tolerance(rp, conditional))
        return replace(res, notes=res.notes + ("zero-point bath allowance applied",))


def log_negativity(tc: TwoModeCov, check=True, tol=PHYS_TOL) -> EntanglementResult:
    """Logarithmic negativity ``max(-ln lam, 0)``.

    ``lam = sqrt(S - sqrt(S**2 - 4 det V)) / sqrt(2)`` with
    ``S = det A + det B - 2 det C``, the symplectic invariant of the matrix after the
    momentum of the oscillator changes sign (which flips the sign of
    ``det C`` and leaves ``det V`` unchanged).

    Raises
    ------
    PhysicalityError
        If ``v + i K`` has an eigenvalue below ``-tol`` (relative to the
        largest entry when that exceeds one) or the discriminant
        ``S**2 - 4 det V`` is negative beyond rounding.
    """
    notes = []
    if check:
        mp = tc.min_physical_eigenvalue()
        if mp < -tol * max(1.0, float(np.max(np.abs(tc.v)))):
            raise PhysicalityError(f"covariance violates the uncertainty relation ({mp:.3e})")
    det_a, det_b, det_c = (np.linalg.det(m) for m in (tc.a, tc.b, tc.c))
    det_v = np.linalg.det(tc.v)
    s = det_a + det_b - 2.0 * det_c
    disc = s * s - 4.0 * det_v
    if disc < 0:
        if disc < -DISC_TOL * max(1.0, s * s):
            raise PhysicalityError(f"negative discriminant {disc:.3e}")
        notes.append("discriminant clipped at zero")
        disc = 0.0
    inner = s - math.sqrt(disc)
    if inner < 0:
        if inner < -DISC_TOL * max(1.0, abs(s)):
            raise PhysicalityError("partial-transpose eigenvalue is imaginary")
        inner = 0.0
    lam = math.sqrt(inner) / math.sqrt(2.0)
    e_n = max(-math.log(lam), 0.0) if lam > 0 else math.inf
    return EntanglementResult(lam=lam, e_n=e_n, entangled=lam < 1.0, notes=tuple(notes))


def two_mode_squeezed(r):
    """Normalized covariance of a two-mode squeezed vacuum with squeezing ``r``."""
    ch, sh = math.cosh(2 * r), math.sinh(2 * r)
    v = np.zeros((4, 4))
    v[:2, :2] = ch * np.eye(2)
    v[2:, 2:] = ch * np.eye(2)
    v[:2, 2:] = np.diag([sh, -sh])
    v[2:, :2] = np.diag([sh, -sh])
    return TwoModeCov(v)


def ideal_conditional_en(n_eff):
    """``-2 ln(sqrt(N_eff + 1) - sqrt(N_eff))``, exact for a pure joint state."""
    return -2.0 * math.log(math.sqrt(n_eff + 1.0) - math.sqrt(n_eff))


@dataclass(frozen=True)
class SweepRow:
    """One grid point of an entanglement sweep; ``result`` is None on error."""

    params: object
    result: EntanglementResult = None
    error: str = None


def entanglement_sweep(points, conditional: bool):
    """Logarithmic negativity at each :class:`ReducedParams` in ``points``.

    Unstable or failing points are recorded with an error message and the
    sweep continues.
    """
    rows = []
    for rp in points:
        try:
            ps = solve_point(rp, conditional=conditional)
            cov = ps.cond if conditional else ps.uncond
            rows.append(SweepRow(rp, checked_log_negativity(rp, cov.v, conditional)))
        except StationarityError as exc:
            rows.append(SweepRow(rp, error=f"unstable: {exc}"))
        except OptomechError as exc:
            rows.append(SweepRow(rp, error=f"{type(exc).__name__}: {exc}"))
    return rows


__all__ = [
    "checked_log_negativity",
    "EntanglementResult",
    "SweepRow",
    "TwoModeCov",
    "entanglement_sweep",
    "ideal_conditional_en",
    "log_negativity",
    "normalize_cov",
    "physicality_tolerance",
    "two_mode_squeezed",
]
