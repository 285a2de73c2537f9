"""Independent brute-force validators for the analytic model.

Three deliberately dumb implementations that never reuse the closed-form
results they are meant to check: exact unitary evolution of a single
phonon shared between two sites, a seeded Monte Carlo estimator of the
thermally averaged hopping signal, and a finite-difference normal-mode
solver for the two-ion crystal.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import CODATA2018
from .kerr_model import HoppingTrace
from .trap_physics import DistanceConvention, TrapConfig, axial_freq_to_distance

_C = CODATA2018

#: Central-difference step for the Hessian, in m (about 1e-5 of d0).
HESSIAN_STEP = 1e-9


@dataclass(frozen=True)
class SinglePhononState:
    """Amplitudes of one phonon shared between the two ion sites."""

    amplitude_ion1: complex
    amplitude_ion2: complex

    @property
    def norm(self) -> float:
        return abs(self.amplitude_ion1) ** 2 + abs(self.amplitude_ion2) ** 2


@dataclass(frozen=True)
class IonCrystal:
    """Two-ion crystal at its equilibrium configuration.

    ``positions`` is a (2, 3) array of (x, y, z) coordinates in m;
    ``trap_frequencies`` is (omega_x, omega_y, omega_z) in rad/s with
    omega_x a placeholder (x motion is not modelled).
    """

    positions: np.ndarray
    trap_frequencies: tuple[float, float, float]
    mass: float

    def __post_init__(self) -> None:
        self.positions.setflags(write=False)


def equilibrium_crystal(config: TrapConfig) -> IonCrystal:
    """Place the two ions at +-d0/2 on the trap axis."""
    d0 = axial_freq_to_distance(config.omega_z, config.mass, DistanceConvention.EXACT)
    positions = np.array([[0.0, 0.0, d0 / 2.0], [0.0, 0.0, -d0 / 2.0]])
    return IonCrystal(positions, (0.0, config.omega_y, config.omega_z), config.mass)


def evolve_amplitudes(kappa: float, chi: float, n_s: int, t: float) -> SinglePhononState:
    """Evolve |1>_1 |0>_2 under the two-site exchange Hamiltonian.

    The single-phonon Hamiltonian in the site basis has exchange
    amplitude (kappa - chi n_s) / 2 on the off-diagonal. The propagator
    is the exact matrix exponential exp(-i H t), evaluated through the
    spectral decomposition of the Hermitian generator (norm-conserving
    for arbitrarily long times, unlike a Pade approximant).
    """
    if n_s < 0:
        raise ValueError(f"n_s must be >= 0, got {n_s}")
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    amp = 0.5 * (kappa - chi * n_s)
    hamiltonian = np.array([[0.0, amp], [amp, 0.0]])
    eigenvalues, eigenvectors = np.linalg.eigh(hamiltonian)
    propagator = (eigenvectors * np.exp(-1j * eigenvalues * t)) @ eigenvectors.T
    a1, a2 = propagator @ np.array([1.0 + 0.0j, 0.0 + 0.0j])
    return SinglePhononState(a1, a2)


def evolve_single_phonon(kappa: float, chi: float, n_s: int, t: float) -> float:
    """Probability that the phonon has hopped to ion 2 after time t.

    Equals sin^2((kappa - chi n_s) t / 2); the agreement is the point of
    the oracle.
    """
    return abs(evolve_amplitudes(kappa, chi, n_s, t).amplitude_ion2) ** 2


def sample_stretch_occupations(
    mean_n: float, samples: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw i.i.d. stretch occupations from the thermal (geometric) law.

    Inverse-CDF sampling: P(n >= k) = (mean_n / (mean_n + 1))^k, so
    n = floor(log(1 - u) / log(mean_n / (mean_n + 1))) for uniform u.
    """
    if mean_n < 0:
        raise ValueError(f"mean_n must be >= 0, got {mean_n}")
    u = rng.random(samples)
    if mean_n == 0:
        return np.zeros(samples, dtype=np.int64)
    log_q = np.log(mean_n / (mean_n + 1.0))
    return np.floor(np.log1p(-u) / log_q).astype(np.int64)


def monte_carlo_signal(
    kappa: float,
    chi: float,
    mean_n: float,
    times: np.ndarray,
    samples: int,
    seed: int,
) -> HoppingTrace:
    """Stochastic estimate of the thermally averaged hopping signal.

    Averages the single-phonon transfer probability over ``samples``
    occupations drawn with a seeded PCG64 generator. The pointwise
    standard error is at most 1 / (2 sqrt(samples)); the same seed
    always yields a bit-identical trace.
    """
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    times = np.asarray(times, dtype=float)
    rng = np.random.default_rng(seed)
    drawn = sample_stretch_occupations(mean_n, samples, rng)
    counts = np.bincount(drawn)
    weights = counts / samples
    rates = kappa - chi * np.arange(counts.size)
    values = np.empty_like(times)
    chunk = max(1, (1 << 21) // rates.size)
    for start in range(0, times.size, chunk):
        block = times[start:start + chunk]
        values[start:start + chunk] = (
            np.sin(0.5 * np.outer(block, rates)) ** 2 @ weights
        )
    return HoppingTrace(
        times=times,
        values=values,
        metadata={"kappa": kappa, "chi": chi, "mean_n": mean_n,
                  "samples": samples, "seed": seed},
    )


def _total_potential(coords: np.ndarray, omega_y: float, omega_z: float, mass: float) -> float:
    """Trap plus Coulomb potential in the (y1, y2, z1, z2) coordinates, x frozen."""
    y1, y2, z1, z2 = coords
    separation = np.hypot(y1 - y2, z1 - z2)
    return (
        0.5 * mass * omega_y**2 * (y1**2 + y2**2)
        + 0.5 * mass * omega_z**2 * (z1**2 + z2**2)
        + _C.coulomb_coefficient / separation
    )


def finite_difference_hessian(crystal: IonCrystal, step: float = HESSIAN_STEP) -> np.ndarray:
    """4x4 Hessian of the total potential by second-order central differences."""
    _, wy, wz = crystal.trap_frequencies
    q0 = np.array([
        crystal.positions[0, 1], crystal.positions[1, 1],
        crystal.positions[0, 2], crystal.positions[1, 2],
    ])
    v0 = _total_potential(q0, wy, wz, crystal.mass)
    hess = np.zeros((4, 4))
    for i in range(4):
        qp, qm = q0.copy(), q0.copy()
        qp[i] += step
        qm[i] -= step
        hess[i, i] = (
            _total_potential(qp, wy, wz, crystal.mass)
            - 2.0 * v0
            + _total_potential(qm, wy, wz, crystal.mass)
        ) / step**2
    for i in range(4):
        for j in range(i + 1,4):
            v = 0.0
            for si, sj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                q = q0.copy()
                q[i] += si * step
                q[j] += sj * step
                v += si * sj * _total_potential(q, wy, wz, crystal.mass)
            hess[i, j] = hess[j, i] = v / (4.0 * step**2)
    return hess


def classical_normal_modes(crystal: IonCrystal) -> np.ndarray:
    """Normal-mode angular frequencies of the two-ion crystal, sorted ascending.

    Builds the finite-difference Hessian in the (y1, y2, z1, z2)
    coordinates, symmetrises it and solves the symmetric eigenproblem;
    returns sqrt(eigenvalue / m). For a stable linear chain these are
    {omega_z, sqrt(3) omega_z, rocking, omega_y}.

    Raises
    ------
    ValueError
        If the crystal is not at force balance, or if an eigenvalue is
        negative (unstable configuration).
    """
    _, wy, wz = crystal.trap_frequencies
    d0 = abs(crystal.positions[0, 2] - crystal.positions[1, 2])
    restoring = crystal.mass * wz**2 * d0 / 2.0
    coulomb = _C.coulomb_coefficient / d0**2
    if abs(restoring - coulomb) / restoring >= 1e-10:
        raise ValueError("crystal is not at its equilibrium configuration")
    hess = finite_difference_hessian(crystal)
    hess = 0.5 * (hess + hess.T)
    eigenvalues = np.linalg.eigvalsh(hess)
    if eigenvalues[0] < 0:
        raise ValueError("negative Hessian eigenvalue: unstable configuration")
    return np.sqrt(eigenvalues / crystal.mass)
