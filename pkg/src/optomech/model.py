"""Physical and dimensionless parameters of the optomechanical system.

All downstream computations use units with ``hbar = m = omega_m = 1``; the
:class:`ReducedParams` fields are therefore ratios to the mechanical
frequency.  :func:`reduce` maps laboratory (SI) parameters onto them.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace

from .errors import ParameterError

HBAR = 1.054571817e-34
K_B = 1.380649e-23
C_LIGHT = 299792458.0


@dataclass(frozen=True)
class ReducedParams:
    """Dimensionless system description (all rates in units of omega_m).

    Attributes
    ----------
    gamma : float
        Cavity amplitude decay rate (half bandwidth).
    delta : float
        Laser detuning from the cavity resonance; negative is red detuned.
    omega_q : float
        Optomechanical coupling frequency, ``Omega_q**3 = hbar G0**2 / m``.
    omega_f : float
        Thermal force noise frequency, ``sqrt(2 gamma_m k_B T / hbar)``.
    gamma_m : float
        Mechanical damping constant entering the response as ``2 i gamma_m W``.
    gamma_eps : float
        Effective bandwidth of the optical-loss port.
    eta : float
        Detection efficiency.
    zeta : float
        Measured output quadrature angle in radians (0 is the phase quadrature).
    """

    gamma: float
    delta: float
    omega_q: float
    omega_f: float = 0.0
    gamma_m: float = 1e-9
    gamma_eps: float = 0.0
    eta: float = 1.0
    zeta: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ParameterError(f"{f.name} must be a finite number, got {v!r}")
            object.__setattr__(self, f.name, float(v))
        if self.gamma <= 0:
            raise ParameterError("gamma must be positive")
        if self.gamma_m <= 0:
            raise ParameterError("gamma_m must be positive")
        if self.omega_q < 0 or self.omega_f < 0 or self.gamma_eps < 0:
            raise ParameterError("omega_q, omega_f and gamma_eps must be nonnegative")
        if not 0.0 <= self.eta <= 1.0:
            raise ParameterError("eta must lie in [0, 1]")

    @property
    def coupling(self):
        """Linearized coupling ``G0`` in internal units, ``omega_q**1.5``."""
        return self.omega_q ** 1.5

    def replace(self, **changes):
        return replace(self, **changes)

    def as_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class PhysicalParams:
    """Laboratory parameters in SI units.

    ``quality`` is ``omega_m / gamma_m`` with ``gamma_m`` the damping constant
    of the mechanical response (see :func:`damping_from_quality`).
    """

    mass: float
    mech_freq: float
    quality: float
    temperature: float
    input_power: float
    cavity_length: float
    finesse: float
    laser_wavelength: float = 1064e-9
    detection_efficiency: float = 1.0
    round_trip_loss: float = 0.0
    detuning: float = 0.0
    zeta: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ParameterError(f"{f.name} must be a finite number, got {v!r}")
            object.__setattr__(self, f.name, float(v))
        for name in ("mass", "mech_freq", "quality", "cavity_length", "finesse",
                     "laser_wavelength"):
            if getattr(self, name) <= 0:
                raise ParameterError(f"{name} must be positive")
        if self.input_power < 0:
            raise ParameterError("input_power must be nonnegative")
        if self.temperature < 0:
            raise ParameterError("temperature must be nonnegative")
        if not 0.0 <= self.detection_efficiency <= 1.0:
            raise ParameterError("detection_efficiency must lie in [0, 1]")
        if not 0.0 <= self.round_trip_loss < 1.0:
            raise ParameterError("round_trip_loss must lie in [0, 1)")

    def replace(self, **changes):
        return replace(self, **changes)


def damping_from_quality(quality):
    """Dimensionless damping constant ``gamma_m / omega_m = 1 / (2 Q_m)``.

    The mechanical response carries ``2 i gamma_m W``, so the energy decay
    rate is ``2 gamma_m`` and the usual quality factor is ``omega_m / (2 gamma_m)``.
    """
    if quality <= 0:
        raise ParameterError("quality must be positive")
    return 1.0 / (2.0 * quality)


def thermal_frequency(temperature, gamma_m, mech_freq):
    """Dimensionless ``Omega_F / omega_m`` for a bath at ``temperature`` kelvin.

    Parameters
    ----------
    temperature : float
        Bath temperature in K.
    gamma_m : float
        Dimensionless damping constant.
    mech_freq : float
        Mechanical angular frequency in rad/s.
    """
    if temperature < 0:
        raise ParameterError("temperature must be nonnegative")
    return math.sqrt(2.0 * gamma_m * K_B * temperature / (HBAR * mech_freq))


def reduce(p: PhysicalParams) -> ReducedParams:
    """Convert laboratory parameters to the dimensionless description.

    The cavity half bandwidth is ``pi c / (2 L F)``, the loss port bandwidth
    ``c eps / (4 L)``, and the intracavity amplitude follows from the input
    photon flux ``I0 / (hbar omega_0)``.
    """
    wm = p.mech_freq
    omega0 = 2.0 * math.pi * C_LIGHT / p.laser_wavelength
    gamma = math.pi * C_LIGHT / (2.0 * p.cavity_length * p.finesse)
    gamma_eps = C_LIGHT * p.round_trip_loss / (4.0 * p.cavity_length)
    a_in = math.sqrt(p.input_power / (HBAR * omega0))
    a_bar = math.sqrt(2.0 * gamma) * a_in / math.hypot(gamma, p.detuning)
    g0 = omega0 / p.cavity_length * a_bar
    omega_q = (HBAR * g0 ** 2 / p.mass) ** (1.0 / 3.0)
    gamma_m = damping_from_quality(p.quality)
    return ReducedParams(
        gamma=gamma / wm,
        delta=p.detuning / wm,
        omega_q=omega_q / wm,
        omega_f=thermal_frequency(p.temperature, gamma_m, wm),
        gamma_m=gamma_m,
        gamma_eps=gamma_eps / wm,
        eta=p.detection_efficiency,
        zeta=p.zeta,
    )


def experimental_params(**overrides) -> PhysicalParams:
    """The experimentally achievable parameter set used by the ``fig7`` preset."""
    wm = 2.0 * math.pi * 1e5
    base = dict(
        mass=1e-6,
        mech_freq=wm,
        quality=5e6,
        temperature=4.0,
        input_power=3e-3,
        cavity_length=1e-2,
        finesse=3e4,
        laser_wavelength=1064e-9,
        detection_efficiency=0.95,
        round_trip_loss=10e-6,
        detuning=-wm,
    )
    base.update(overrides)
    return PhysicalParams(**base)


__all__ = [
    "C_LIGHT",
    "HBAR",
    "K_B",
    "PhysicalParams",
    "ReducedParams",
    "damping_from_quality",
    "experimental_params",
    "reduce",
    "thermal_frequency",
]
