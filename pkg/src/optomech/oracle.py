"""State-space cross-checks for the frequency-domain pipeline.

The linearized dynamics of ``(x, p, a1, a2)`` are written as

``d/dt s = A s + B w``,   ``Y_zeta = C s + D w``,

with seven independent white noise channels ``w`` of unit single-sided
symmetrized spectrum, which corresponds to a two-sided intensity of ``1/2``.
The steady unconditional covariance solves a Lyapunov equation and the
conditional covariance of the optimal filter solves an algebraic Riccati
equation with correlated process and measurement noise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .dynamics import CHANNELS, build_transfers, stability_margin
from .errors import OracleFailure, StationarityError
from .model import ReducedParams

RICCATI_MAX_ITER = 200
RICCATI_TOL = 1e-12


@dataclass(frozen=True)
class StateSpaceModel:
    """Drift, noise input, measurement row and feedthrough of the linear system.

    Noise columns follow :data:`optomech.dynamics.CHANNELS`.
    """

    drift: np.ndarray
    noise_input: np.ndarray
    measurement_row: np.ndarray
    measurement_feedthrough: np.ndarray

    @property
    def q(self):
        """Process noise intensity ``B B^T / 2``."""
        return 0.5 * self.noise_input @ self.noise_input.T

    @property
    def r(self):
        """Measurement noise intensity ``D D^T / 2``."""
        return 0.5 * self.measurement_feedthrough @ self.measurement_feedthrough.T

    @property
    def n(self):
        """Cross intensity ``B D^T / 2``."""
        return 0.5 * self.noise_input @ self.measurement_feedthrough.T


def build_state_space(rp: ReducedParams) -> StateSpaceModel:
    """Linear equations of motion in internal units.

    ``x' = p``, ``p' = -x - 2 gamma_m p - sqrt(2) G a1 + xi``,
    ``a1' = -gamma a1 - Delta a2 + sqrt(2 gamma) v1 + sqrt(2 gamma_eps) u1``,
    ``a2' = Delta a1 - gamma a2 - sqrt(2) G x + sqrt(2 gamma) v2 + sqrt(2 gamma_eps) u2``,
    with ``G = Omega_q**1.5`` and the thermal force ``xi = sqrt(2) Omega_F w_xi``.
    """
    g, d, gm = rp.gamma, rp.delta, rp.gamma_m
    G = rp.coupling
    r2 = math.sqrt(2.0)
    a = np.array([
        [0.0, 1.0, 0.0, 0.0],
        [-1.0, -2.0 * gm, -r2 * G, 0.0],
        [0.0, 0.0, -g, -d],
        [-r2 * G, 0.0, d, -g],
    ])
    b = np.zeros((4, len(CHANNELS)))
    idx = {name: i for i, name in enumerate(CHANNELS)}
    b[2, idx["v1"]] = b[3, idx["v2"]] = math.sqrt(2.0 * g)
    b[1, idx["xi"]] = r2 * rp.omega_f
    b[2, idx["u1"]] = b[3, idx["u2"]] = math.sqrt(2.0 * rp.gamma_eps)
    s, c = math.sin(rp.zeta), math.cos(rp.zeta)
    se, sl = math.sqrt(rp.eta), math.sqrt(1.0 - rp.eta)
    cm = se * math.sqrt(2.0 * g) * np.array([[0.0, 0.0, s, c]])
    dm = np.zeros((1, len(CHANNELS)))
    dm[0, idx["v1"]], dm[0, idx["v2"]] = -se * s, -se * c
    dm[0, idx["n1"]], dm[0, idx["n2"]] = sl * s, sl * c
    return StateSpaceModel(a, b, cm, dm)


def is_hurwitz(a, margin=0.0):
    return bool(np.max(np.linalg.eigvals(a).real) < -margin)


def lyapunov_steady(m: StateSpaceModel) -> np.ndarray:
    """Steady covariance from ``A V + V A^T + B B^T / 2 = 0``.

    Raises
    ------
    StationarityError
        If the drift is not Hurwitz.
    """
    if not is_hurwitz(m.drift):
        raise StationarityError("drift matrix is not Hurwitz")
    v = linalg.solve_continuous_lyapunov(m.drift, -m.q)
    return 0.5 * (v + v.T)


def _riccati_residual(a, c, q, r, n, p):
    k = (p @ c.T + n) @ np.linalg.inv(r)
    return a @ p + p @ a.T + q - k @ r @ k.T


def riccati_steady(m: StateSpaceModel, max_iter=RICCATI_MAX_ITER, tol=RICCATI_TOL,
                   newton_steps=3) -> np.ndarray:
    """Stabilizing solution of the filter Riccati equation.

    Solves ``A P + P A^T + Q - (P C^T + N) R^-1 (P C^T + N)^T = 0``.  The
    cross term is absorbed by ``A~ = A - N R^-1 C`` and ``Q~ = Q - N R^-1 N^T``;
    the stable invariant subspace of the Hamiltonian
    ``[[A~^T, -C^T R^-1 C], [-Q~, -A~]]`` is found with the scaled Newton
    iteration for the matrix sign function, then refined with Newton
    (Kleinman) steps on the Riccati equation itself.

    Raises
    ------
    StationarityError
        If the drift is not Hurwitz.
    OracleFailure
        If the sign iteration does not converge within ``max_iter`` steps or
        the refined residual is too large.
    """
    a, c = m.drift, m.measurement_row
    if not is_hurwitz(a):
        raise StationarityError("drift matrix is not Hurwitz")
    q, r, n = m.q, m.r, m.n
    if not np.all(np.linalg.eigvalsh(r) > 0):
        raise OracleFailure("measurement noise intensity must be positive")
    rinv = np.linalg.inv(r)
    at = a - n @ rinv @ c
    qt = q - n @ rinv @ n.T
    dim = a.shape[0]
    h = np.block([[at.T, -c.T @ rinv @ c], [-qt, -at]])
    z = h.copy()
    converged = False
    for it in range(max_iter):
        zinv = np.linalg.inv(z)
        # determinant scaling accelerates the early iterations
        det = abs(np.linalg.det(z))
        mu = det ** (-1.0 / z.shape[0]) if det > 0 else 1.0
        znew = 0.5 * (mu * z + zinv / mu)
        delta = np.linalg.norm(znew - z, 1) / max(np.linalg.norm(znew, 1), 1e-300)
        z = znew
        if delta < tol:
            converged = True
            break
    if not converged:
        raise OracleFailure(f"sign iteration did not converge in {max_iter} steps "
                            f"(last relative change {delta:.3e})")
    # stable subspace: (Z + I) [I; P] = 0 in the transformed block structure
    w = z + np.eye(2 * dim)
    lhs = w[:, dim:]
    rhs = -w[:, :dim]
    p, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    p = 0.5 * (p + p.T)
    for _ in range(newton_steps):
        k = (p @ c.T + n) @ rinv
        acl = a - k @ c
        rhs = q + k @ r @ k.T - n @ k.T - k @ n.T
        p_new = linalg.solve_continuous_lyapunov(acl, -rhs)
        p_new = 0.5 * (p_new + p_new.T)
        if np.linalg.norm(p_new - p) <= 1e-15 * np.linalg.norm(p_new):
            p = p_new
            break
        p = p_new
    res = np.linalg.norm(_riccati_residual(a, c, q, r, n, p))
    if res > 1e-10 * max(np.linalg.norm(p), 1.0):
        raise OracleFailure(f"Riccati residual {res:.3e} exceeds tolerance")
    return p


def riccati_residual(m: StateSpaceModel, p):
    """Residual matrix of the filter Riccati equation at ``p``."""
    return _riccati_residual(m.drift, m.measurement_row, m.q, m.r, m.n, p)


def kalman_gain(m: StateSpaceModel, p):
    """Steady gain ``(P C^T + N) R^-1``."""
    return (p @ m.measurement_row.T + m.n) @ np.linalg.inv(m.r)


def kalman_filter_response(m: StateSpaceModel, p, w):
    """Frequency response ``(-i W - A + L C)^-1 L`` of the steady filter.

    Returns one row per state component; row 0 is the ``x`` filter.
    """
    ell = kalman_gain(m, p)
    mat = -1j * w * np.eye(4) - (m.drift - ell @ m.measurement_row)
    return np.linalg.solve(mat, ell)[:, 0]


# -- random-draw equivalence suites ---------------------------------------

DRAW_RANGES = dict(
    gamma=(0.1, 10.0),  # log-uniform
    delta=(-3.0, 1.0),
    omega_q=(0.05, 1.0),
    omega_f=(0.0, 1.0),
    gamma_m=(1e-6, 1e-2),  # log-uniform
)


def random_draws(count, seed=0, min_margin=1e-3):
    """Reproducible random stable parameter points.

    Draws whose slowest pole decays slower than ``min_margin * gamma_m`` are
    rejected so that near-marginal points do not dominate the comparison.
    The measurement settings cycle through ``eta in {0.5, 1}`` and
    ``zeta in {0, pi/4}``.
    """
    rng = np.random.default_rng(seed)
    out = []
    lo, hi = DRAW_RANGES["gamma"]
    lm, hm = DRAW_RANGES["gamma_m"]
    while len(out) < count:
        i = len(out)
        rp = ReducedParams(
            gamma=10 ** rng.uniform(math.log10(lo), math.log10(hi)),
            delta=rng.uniform(*DRAW_RANGES["delta"]),
            omega_q=rng.uniform(*DRAW_RANGES["omega_q"]),
            omega_f=rng.uniform(*DRAW_RANGES["omega_f"]),
            gamma_m=10 ** rng.uniform(math.log10(lm), math.log10(hm)),
            eta=(0.5, 1.0)[i % 2],
            zeta=(0.0, math.pi / 4)[(i // 2) % 2],
        )
        if stability_margin(build_transfers(rp)) < min_margin * rp.gamma_m:
            continue
        out.append(rp)
    return out


def relative_deviation(a, b):
    """``max |a_ij - b_ij| / sqrt(b_ii b_jj)`` over all entries."""
    a, b = np.asarray(a), np.asarray(b)
    d = np.sqrt(np.abs(np.outer(np.diag(b), np.diag(b))))
    d[d == 0] = 1.0
    return float(np.max(np.abs(a - b) / d))


@dataclass(frozen=True)
class SuiteResult:
    """Outcome of an equivalence suite."""

    name: str
    draws: int
    max_deviation: float
    tolerance: float
    worst: ReducedParams = None

    @property
    def passed(self):
        return self.max_deviation <= self.tolerance


def unconditional_suite(draws, tol=1e-7):
    """Lyapunov against frequency-domain covariances (all ten entries)."""
    from .estimator import solve_point

    worst, worst_rp = 0.0, None
    for rp in draws:
        fd = solve_point(rp, conditional=False).uncond.v
        ref = lyapunov_steady(build_state_space(rp))
        dev = relative_deviation(fd, ref)
        if dev > worst:
            worst, worst_rp = dev, rp
    return SuiteResult("lyapunov-vs-spectra", len(draws), worst, tol, worst_rp)


def conditional_suite(draws, tol=1e-6):
    """Riccati against Wiener-filter conditional ``(x, p)`` blocks."""
    from .estimator import solve_point

    worst, worst_rp = 0.0, None
    for rp in draws:
        fd = solve_point(rp).cond.v[:2, :2]
        ref = riccati_steady(build_state_space(rp))[:2, :2]
        dev = relative_deviation(fd, ref)
        if dev > worst:
            worst, worst_rp = dev, rp
    return SuiteResult("riccati-vs-wiener", len(draws), worst, tol, worst_rp)


def validate(draws=100, seed=0):
    """Run both suites on the same reproducible draws."""
    pts = random_draws(draws, seed=seed)
    return [unconditional_suite(pts), conditional_suite(pts)]


__all__ = [
    "DRAW_RANGES",
    "StateSpaceModel",
    "SuiteResult",
    "build_state_space",
    "conditional_suite",
    "kalman_filter_response",
    "kalman_gain",
    "lyapunov_steady",
    "random_draws",
    "relative_deviation",
    "riccati_residual",
    "riccati_steady",
    "unconditional_suite",
    "validate",
]
