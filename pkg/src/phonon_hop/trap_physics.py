"""Trap-derived quantities for a two-ion linear chain.

Everything in this module is a pure function of the trap parameters:
inter-ion distance conversions, the four relevant collective-mode
frequencies, the phonon hopping rate, Doppler temperature, thermal
occupations and Lamb-Dicke estimates.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .constants import CODATA2018, TWO_PI

_C = CODATA2018


class DistanceConvention(enum.Enum):
    """Convention relating the inter-ion distance d0 to the axial frequency.

    ``EXACT`` is the true two-ion equilibrium separation 2^(1/3) * l with
    l = (e^2 / (4 pi eps0 m wz^2))^(1/3). ``LENGTH_SCALE`` takes d0 = l,
    which reproduces the distance/frequency pairs used to calibrate this
    apparatus. ``JAMES_FIT`` uses the N-ion minimum-spacing fit
    l * 2.018 / 2^0.559 evaluated at N = 2.
    """

    EXACT = "exact"
    LENGTH_SCALE = "length_scale"
    JAMES_FIT = "james_fit"


# d0 = _CONVENTION_FACTOR[convention] * length_scale
_CONVENTION_FACTOR = {
    DistanceConvention.EXACT: 2.0 ** (1.0 / 3.0),
    DistanceConvention.LENGTH_SCALE: 1.0,
    DistanceConvention.JAMES_FIT: 2.018 / 2.0**0.559,
}


@dataclass(frozen=True)
class TrapConfig:
    """Trap parameter set from which all derived quantities follow.

    Parameters
    ----------
    mass : float
        Ion mass in kg.
    omega_y : float
        Radial-y trap angular frequency in rad/s.
    omega_z : float
        Axial trap angular frequency in rad/s. Must satisfy
        ``omega_y > omega_z > 0`` for a linear chain with a real rocking
        frequency.
    axial_temperature : float
        Temperature of the axial motion in K. Defaults to the Doppler
        limit of the 20.4 MHz wide S1/2-P1/2 transition.
    """

    mass: float = _C.ca40_mass
    omega_y: float = TWO_PI * 2.87e6
    omega_z: float = TWO_PI * 213e3
    axial_temperature: float = _C.reduced_planck * TWO_PI * 20.4e6 / (2.0 * _C.boltzmann)

    def __post_init__(self) -> None:
        if not self.mass > 0:
            raise ValueError(f"mass must be positive, got {self.mass}")
        if not self.omega_z > 0:
            raise ValueError(f"omega_z must be positive, got {self.omega_z}")
        if not self.omega_y > self.omega_z:
            raise ValueError(
                "omega_y must exceed omega_z (zigzag instability / imaginary "
                f"rocking frequency): omega_y={self.omega_y}, omega_z={self.omega_z}"
            )
        if self.axial_temperature < 0:
            raise ValueError(
                f"axial_temperature must be >= 0, got {self.axial_temperature}"
            )


@dataclass(frozen=True)
class ModeSpectrum:
    """Collective-mode angular frequencies and hopping rate, all in rad/s."""

    omega_com_z: float
    omega_stretch: float
    omega_com_y: float
    omega_rock: float
    kappa: float


# Reference trap settings (omega_y, omega_z) as ordinary frequencies in Hz:
# the distance sweep holds the radial frequency at 2.87 MHz, the radial
# sweep holds the inter-ion distance at 16.4 um (axial 140 kHz).
DISTANCE_SWEEP_HZ = ((2.87e6, 213e3), (2.87e6, 140e3), (2.87e6, 105e3), (2.87e6, 50e3))
RADIAL_SWEEP_HZ = ((2.43e6, 140e3), (2.64e6, 140e3), (2.87e6, 140e3), (3.11e6, 140e3))
REFERENCE_SETTINGS_HZ = DISTANCE_SWEEP_HZ + RADIAL_SWEEP_HZ


def length_scale(omega_z: float, mass: float) -> float:
    """Coulomb length scale l = (e^2 / (4 pi eps0 m wz^2))^(1/3) in m."""
    if not omega_z > 0:
        raise ValueError(f"omega_z must be positive, got {omega_z}")
    if not mass > 0:
        raise ValueError(f"mass must be positive, got {mass}")
    return (_C.coulomb_coefficient / (mass * omega_z**2)) ** (1.0 / 3.0)


def axial_freq_to_distance(
    omega_z: float,
    mass: float = _C.ca40_mass,
    convention: DistanceConvention = DistanceConvention.EXACT,
) -> float:
    """Inter-ion distance d0 in m for a given axial angular frequency.

    Strictly decreasing in ``omega_z`` and scales as ``omega_z**(-2/3)``
    under every convention.
    """
    return _CONVENTION_FACTOR[convention] * length_scale(omega_z, mass)


def distance_to_axial_freq(
    d0: float,
    mass: float = _C.ca40_mass,
    convention: DistanceConvention = DistanceConvention.EXACT,
) -> float:
    """Axial angular frequency in rad/s whose d0 equals the given distance.

    Exact inverse of :func:`axial_freq_to_distance`.
    """
    if not d0 > 0:
        raise ValueError(f"d0 must be positive, got {d0}")
    if not mass > 0:
        raise ValueError(f"mass must be positive, got {mass}")
    l = d0 / _CONVENTION_FACTOR[convention]
    return np.sqrt(_C.coulomb_coefficient / (mass * l**3))


def hopping_rate(config: TrapConfig) -> float:
    """Phonon hopping rate kappa in rad/s.

    Evaluates e^2 / (4 pi eps0 m omega_y d0^3) at the exact equilibrium
    separation, which is algebraically identical to omega_z^2 / (2 omega_y).
    """
    d0 = axial_freq_to_distance(config.omega_z, config.mass, DistanceConvention.EXACT)
    return _C.coulomb_coefficient / (config.mass * config.omega_y * d0**3)


def mode_spectrum(config: TrapConfig) -> ModeSpectrum:
    """Four collective-mode frequencies plus hopping rate for a two-ion chain.

    The axial branch splits into the centre-of-mass mode at omega_z and the
    stretch mode at sqrt(3) omega_z; the radial-y branch into the
    centre-of-mass mode at omega_y and the rocking mode at
    sqrt(omega_y^2 - omega_z^2).
    """
    wy, wz = config.omega_y, config.omega_z
    return ModeSpectrum(
        omega_com_z=wz,
        omega_stretch=np.sqrt(3.0) * wz,
        omega_com_y=wy,
        omega_rock=np.sqrt(wy**2 - wz**2),
        kappa=hopping_rate(config),
    )


def doppler_temperature(gamma: float) -> float:
    """Doppler cooling limit hbar * gamma / (2 kB) in K.

    ``gamma`` is the natural linewidth of the cooling transition in rad/s.
    """
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    return _C.reduced_planck * gamma / (2.0 * _C.boltzmann)


def rms_velocity(temperature: float, mass: float = _C.ca40_mass) -> float:
    """One-dimensional rms thermal velocity sqrt(kB T / m) in m/s."""
    if temperature < 0:
        raise ValueError(f"temperature must be >= 0, got {temperature}")
    if not mass > 0:
        raise ValueError(f"mass must be positive, got {mass}")
    return np.sqrt(_C.boltzmann * temperature / mass)


def mean_stretch_occupation(
    v_rms: float, omega_s: float, mass: float = _C.ca40_mass
) -> float:
    """Mean thermal phonon number m v_rms^2 / (hbar omega_s) of the stretch mode.

    With ``v_rms = sqrt(kB T / m)`` this equals kB T / (hbar omega_s).
    """
    if not omega_s > 0:
        raise ValueError(f"omega_s must be positive, got {omega_s}")
    return mass * v_rms**2 / (_C.reduced_planck * omega_s)


def modified_lamb_dicke(
    wavenumber: float,
    projection_cosine: float,
    omega: float,
    mass: float,
    mean_n: float,
) -> float:
    """Thermally modified Lamb-Dicke parameter eta * sqrt(mean_n).

    eta = k cos(theta) sqrt(hbar / (2 m omega)) is the bare Lamb-Dicke
    parameter of a single-ion mode at angular frequency ``omega``; the
    sqrt(mean_n) factor accounts for the finite thermal occupation. At
    fixed temperature (mean_n = kB T / (hbar omega)) the product scales
    as 1/omega.
    """
    if not omega > 0:
        raise ValueError(f"omega must be positive, got {omega}")
    if not 0 <= abs(projection_cosine) <= 1:
        raise ValueError(f"|projection_cosine| must be <= 1, got {projection_cosine}")
    if mean_n < 0:
        raise ValueError(f"mean_n must be >= 0, got {mean_n}")
    eta = wavenumber * projection_cosine * np.sqrt(_C.reduced_planck / (2.0 * mass * omega))
    return eta * np.sqrt(mean_n)
