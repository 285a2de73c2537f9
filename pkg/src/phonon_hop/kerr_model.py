"""Kerr cross-mode decoherence model for two-ion phonon hopping.

The axial stretch mode couples to the radial rocking mode through the
Coulomb nonlinearity. A stretch occupation of n shifts the rocking
frequency by chi * n, so each Fock component of the thermal stretch
distribution hops at its own rate kappa - chi * n. Averaging over the
thermal distribution dephases the hopping oscillation; this module
provides the coupling constant, the averaged signal, its closed-form
envelope and the derived coherence metrics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .constants import CODATA2018, TWO_PI
from .trap_physics import ModeSpectrum

_C = CODATA2018

#: Contrast threshold defining the decay time.
DECAY_THRESHOLD = 1.0 / math.e


class ResonanceError(ValueError):
    """Raised when 4 omega_rock^2 = omega_stretch^2 (2:1 mode resonance)."""


@dataclass(frozen=True)
class KerrCoupling:
    """Cross-mode coupling constant chi in rad/s (negative in the normal regime)."""

    chi: float


@dataclass(frozen=True)
class ThermalDistribution:
    """Truncated thermal (geometric) phonon-number distribution.

    ``probabilities[n]`` is mean_n^n / (mean_n + 1)^(n + 1) for
    n = 0 .. n_max, where n_max is the smallest integer whose cumulative
    probability reaches 1 - tail_tol. ``tail_bound`` is the exact weight
    of the discarded tail.
    """

    mean_n: float
    probabilities: np.ndarray
    n_max: int
    tail_bound: float

    def __post_init__(self) -> None:
        self.probabilities.setflags(write=False)


@dataclass(frozen=True)
class HoppingTrace:
    """Time series of the phonon-hopping excitation probability.

    ``values[i]`` is the probability that the phonon initially localised
    on ion 1 has hopped to ion 2 by ``times[i]`` (so values[0] = 0 for a
    grid starting at t = 0). ``metadata`` records the generating
    parameters, or ``{"source": "ingested"}`` for imported data.
    """

    times: np.ndarray
    values: np.ndarray
    metadata: dict[str, Any] = field(default_factory=dict)
    convention: str = "phonon left ion 1"

    def __post_init__(self) -> None:
        if self.times.size != self.values.size:
            raise ValueError("times and values must have equal length")
        if self.times.size == 0:
            raise ValueError("empty time grid")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if self.values.min() < 0 or self.values.max() > 1:
            raise ValueError("values must lie in [0, 1]")
        self.times.setflags(write=False)
        self.values.setflags(write=False)


@dataclass(frozen=True)
class CoherenceMetrics:
    """Decay time, effective hopping frequency and oscillation count.

    ``decay_time`` is the first time the envelope contrast reaches 1/e,
    or ``math.inf`` when the model never decays that far.
    ``num_oscillations`` is hopping_frequency * decay_time / (2 pi).
    """

    decay_time: float
    hopping_frequency: float
    num_oscillations: float


def kerr_chi(spectrum: ModeSpectrum, omega_z: float, mass: float) -> KerrCoupling:
    """Kerr coupling constant between the stretch and rocking modes.

    chi = -omega_s * (1/2 + (omega_s^2 / 2) / (4 omega_r^2 - omega_s^2))
          * (omega_z / omega_r) * (2 hbar omega_z / (alpha^2 m c^2))^(1/3)

    Raises
    ------
    ResonanceError
        If 4 omega_r^2 = omega_s^2, where the perturbative expression
        diverges.
    """
    ws, wr = spectrum.omega_stretch, spectrum.omega_rock
    if not (ws > 0 and wr > 0 and omega_z > 0):
        raise ValueError("all mode frequencies must be positive")
    denom = 4.0 * wr**2 - ws**2
    if denom == 0:
        raise ResonanceError("4 omega_rock^2 equals omega_stretch^2 (2:1 resonance)")
    bracket = 0.5 + (ws**2 / 2.0) / denom
    zero_point = (2.0 * _C.reduced_planck * omega_z
                  / (_C.fine_structure**2 * mass * _C.speed_of_light**2)) ** (1.0 / 3.0)
    return KerrCoupling(chi=-ws * bracket * (omega_z / wr) * zero_point)


def rocking_shift(chi: KerrCoupling, n_s: int) -> float:
    """Rocking-mode frequency shift chi * n_s for stretch occupation n_s."""
    if n_s < 0:
        raise ValueError(f"n_s must be >= 0, got {n_s}")
    return chi.chi * n_s


def thermal_distribution(mean_n: float, tail_tol: float = 1e-12) -> ThermalDistribution:
    """Thermal phonon-number distribution truncated to cumulative 1 - tail_tol.

    The truncation index is found from the exact geometric survival
    function (mean_n / (mean_n + 1))^(n + 1) in log space, so it stays
    correct for tolerances near machine precision where a floating
    cumulative sum would be unreliable.
    """
    if mean_n < 0:
        raise ValueError(f"mean_n must be >= 0, got {mean_n}")
    if not 0 < tail_tol < 1:
        raise ValueError(f"tail_tol must be in (0, 1), got {tail_tol}")
    if mean_n == 0:
        return ThermalDistribution(0.0, np.array([1.0]), 0, 0.0)
    log_q = math.log(mean_n) - math.log(mean_n + 1.0)
    n_max = max(0, math.ceil(math.log(tail_tol) / log_q - 1.0))
    n = np.arange(n_max + 1)
    probs = np.exp(n * math.log(mean_n) - (n + 1) * math.log(mean_n + 1.0))
    tail = math.exp((n_max + 1) * log_q)
    return ThermalDistribution(mean_n, probs, n_max, tail)


def hopping_signal(
    kappa: float,
    chi: float,
    dist: ThermalDistribution,
    times: np.ndarray,
) -> HoppingTrace:
    """Thermally averaged hopping probability h(t) = sum_n P_n sin^2((kappa - chi n) t / 2).

    With chi = 0 this reduces exactly to sin^2(kappa t / 2).
    """
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        raise ValueError("empty time grid")
    if times[0] < 0:
        raise ValueError("times must start at t >= 0")
    rates = kappa - chi * np.arange(dist.n_max + 1)
    values = np.empty_like(times)
    # chunk the grid so the (time, fock) matrix stays small
    chunk = max(1, (1 << 21) // rates.size)
    for start in range(0, times.size, chunk):
        block = times[start:start + chunk]
        values[start:start + chunk] = (
            np.sin(0.5 * np.outer(block, rates)) ** 2 @ dist.probabilities
        )
    return HoppingTrace(
        times=times,
        values=values,
        metadata={"kappa": kappa, "chi": chi, "mean_n": dist.mean_n},
    )


def envelope_closed_form(
    kappa: float, chi: float, mean_n: float, t: float | np.ndarray
) -> tuple[float | np.ndarray, float | np.ndarray]:
    """Contrast and phase of the hopping oscillation at time(s) t.

    Resumming the geometric thermal series gives
    sum_n P_n exp(-i chi n t) = 1 / ((mean_n + 1) - mean_n exp(-i chi t)),
    so h(t) = 1/2 - (1/2) contrast(t) cos(kappa t + phase(t)) with

        contrast(t) = 1 / sqrt(1 + 4 mean_n (mean_n + 1) sin^2(chi t / 2))
        phase(t) = -atan2(mean_n sin(chi t), (mean_n + 1) - mean_n cos(chi t))

    The contrast is 1 at t = 0 and exactly periodic with period
    2 pi / |chi| (revival).
    """
    if mean_n < 0:
        raise ValueError(f"mean_n must be >= 0, got {mean_n}")
    phi = chi * np.asarray(t, dtype=float)
    contrast = 1.0 / np.sqrt(1.0 + 4.0 * mean_n * (mean_n + 1.0) * np.sin(phi / 2.0) ** 2)
    phase = -np.arctan2(mean_n * np.sin(phi), (mean_n + 1.0) - mean_n * np.cos(phi))
    if np.isscalar(t):
        return float(contrast), float(phase)
    return contrast, phase


def _contrast(chi: float, mean_n: float, t: float) -> float:
    return 1.0 / math.sqrt(1.0 + 4.0 * mean_n * (mean_n + 1.0) * math.sin(chi * t / 2.0) ** 2)


def coherence_metrics(kappa: float, chi: float, mean_n: float) -> CoherenceMetrics:
    """Decay time, effective hopping frequency and oscillation count.

    The decay time is the 1/e contrast crossing, bracketed and bisected
    on the first half-period of chi t where the envelope is monotone
    (absolute time tolerance 1e-9 of the revival period). The effective
    hopping frequency is the thermal-mean shifted rate kappa - chi mean_n.
    If the envelope never reaches 1/e before the revival, the decay time
    and oscillation count are unbounded (inf).
    """
    if not kappa > 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    if mean_n < 0:
        raise ValueError(f"mean_n must be >= 0, got {mean_n}")
    f_hop = kappa - chi * mean_n
    if chi == 0.0 or mean_n == 0.0:
        return CoherenceMetrics(math.inf, f_hop, math.inf)
    half_period = math.pi / abs(chi)
    if _contrast(chi, mean_n, half_period) > DECAY_THRESHOLD:
        return CoherenceMetrics(math.inf, f_hop, math.inf)
    lo, hi = 0.0, half_period
    tol = 1e-9 * (TWO_PI / abs(chi))
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _contrast(chi, mean_n, mid) > DECAY_THRESHOLD:
            lo = mid
        else:
            hi = mid
    decay_time = 0.5 * (lo + hi)
    return CoherenceMetrics(decay_time, f_hop, f_hop * decay_time / TWO_PI)
