"""Cross-checks of the analytic model against the brute-force oracles.

Run by the ``verify`` CLI subcommand and by the test suite. Every check
compares two independent computation routes on the eight reference trap
settings and reports the worst observed deviation against its tolerance.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import TWO_PI
from .kerr_model import envelope_closed_form, hopping_signal, kerr_chi, thermal_distribution
from .quantum_oracle import (
    classical_normal_modes,
    equilibrium_crystal,
    evolve_single_phonon,
    monte_carlo_signal,
)
from .trap_physics import (
    REFERENCE_SETTINGS_HZ,
    TrapConfig,
    mean_stretch_occupation,
    mode_spectrum,
    rms_velocity,
)

MC_SAMPLES = 100_000
MC_SEED = 20240901


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    max_deviation: float
    tolerance: float
    detail: str

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status} {self.name}: max deviation {self.max_deviation:.3e} "
            f"(tolerance {self.tolerance:.3e}) {self.detail}"
        )


def _reference_configs() -> list[TrapConfig]:
    return [
        TrapConfig(omega_y=TWO_PI * fy, omega_z=TWO_PI * fz)
        for fy, fz in REFERENCE_SETTINGS_HZ
    ]


def _model_parameters(config: TrapConfig) -> tuple[float, float, float]:
    """(kappa, chi, mean_n) for a trap setting."""
    spectrum = mode_spectrum(config)
    chi = kerr_chi(spectrum, config.omega_z, config.mass).chi
    mean_n = mean_stretch_occupation(
        rms_velocity(config.axial_temperature, config.mass),
        spectrum.omega_stretch,
        config.mass,
    )
    return spectrum.kappa, chi, mean_n


def check_kappa_consistency(tolerance_identity: float = 1e-10,
                            tolerance_split: float = 0.01) -> CheckResult:
    """Hopping rate: Coulomb formula vs omega_z^2/(2 omega_y) vs Hessian splitting."""
    worst = 0.0
    for config in _reference_configs():
        kappa = mode_spectrum(config).kappa
        alt = config.omega_z**2 / (2.0 * config.omega_y)
        worst = max(worst, abs(kappa - alt) / alt)
    worst_split = 0.0
    for config in _reference_configs():
        kappa = mode_spectrum(config).kappa
        modes = classical_normal_modes(equilibrium_crystal(config))
        split = modes[3] - modes[2]
        worst_split = max(worst_split, abs(split - kappa) / kappa)
    passed = worst < tolerance_identity and worst_split < tolerance_split
    return CheckResult(
        "kappa-consistency",
        passed,
        max(worst, worst_split),
        tolerance_split,
        f"[identity dev {worst:.3e} vs {tolerance_identity:.0e}, "
        f"splitting dev {worst_split:.3e} vs {tolerance_split:.0e}]",
    )


def check_hessian_vs_analytic(tolerance: float = 1e-6) -> CheckResult:
    """Finite-difference normal modes vs the analytic mode spectrum."""
    worst = 0.0
    for config in _reference_configs():
        spectrum = mode_spectrum(config)
        expected = np.sort([
            spectrum.omega_com_z, spectrum.omega_stretch,
            spectrum.omega_rock, spectrum.omega_com_y,
        ])
        observed = classical_normal_modes(equilibrium_crystal(config))
        worst = max(worst, float(np.max(np.abs(observed - expected) / expected)))
    return CheckResult(
        "hessian-vs-analytic", worst < tolerance, worst, tolerance,
        "[4 mode frequencies on 8 settings]",
    )


def check_unitary_vs_closed_form(tolerance: float = 1e-10, seed: int = 777) -> CheckResult:
    """Matrix-exponential evolution vs sin^2((kappa - chi n) t / 2)."""
    config = TrapConfig()
    kappa, chi, _ = _model_parameters(config)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n_s in range(6):
        for t in rng.uniform(0.0, 20.0 * TWO_PI / kappa, size=100):
            numeric = evolve_single_phonon(kappa, chi, n_s, t)
            exact = np.sin(0.5 * (kappa - chi * n_s) * t) ** 2
            worst = max(worst, abs(numeric - exact))
    return CheckResult(
        "unitary-vs-closed-form", worst < tolerance, worst, tolerance,
        "[n = 0..5, 100 random times each]",
    )


def check_sum_vs_envelope(tolerance: float = 1e-9, grid_points: int = 10_000) -> CheckResult:
    """Truncated thermal sum vs the closed-form envelope over one revival."""
    config = TrapConfig()
    kappa, chi, mean_n = _model_parameters(config)
    dist = thermal_distribution(mean_n, tail_tol=1e-12)
    times = np.linspace(0.0, TWO_PI / abs(chi), grid_points)
    summed = hopping_signal(kappa, chi, dist, times).values
    contrast, phase = envelope_closed_form(kappa, chi, mean_n, times)
    closed = 0.5 - 0.5 * contrast * np.cos(kappa * times + phase)
    worst = float(np.max(np.abs(summed - closed)))
    return CheckResult(
        "sum-vs-envelope", worst < tolerance, worst, tolerance,
        f"[{grid_points}-point grid over one revival period]",
    )


def check_monte_carlo_vs_sum(sigma_tolerance: float = 5.0,
                             grid_points: int = 10_000) -> CheckResult:
    """Seeded Monte Carlo estimator vs the truncated thermal sum."""
    config = TrapConfig()
    kappa, chi, mean_n = _model_parameters(config)
    dist = thermal_distribution(mean_n, tail_tol=1e-12)
    times = np.linspace(0.0, TWO_PI / abs(chi), grid_points)
    summed = hopping_signal(kappa, chi, dist, times).values
    estimated = monte_carlo_signal(kappa, chi, mean_n, times, MC_SAMPLES, MC_SEED).values
    standard_error = 1.0 / (2.0 * np.sqrt(MC_SAMPLES))
    worst = float(np.max(np.abs(estimated - summed))) / standard_error
    return CheckResult(
        "monte-carlo-vs-thermal-sum", worst < sigma_tolerance, worst, sigma_tolerance,
        f"[deviation in units of the 1/(2 sqrt(N)) standard error, N = {MC_SAMPLES}]",
    )


def run_all_checks() -> list[CheckResult]:
    return [
        check_kappa_consistency(),
        check_hessian_vs_analytic(),
        check_unitary_vs_closed_form(),
        check_sum_vs_envelope(),
        check_monte_carlo_vs_sum(),
    ]
