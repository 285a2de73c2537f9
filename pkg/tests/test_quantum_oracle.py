"""Brute-force oracles: unitary evolution, Monte Carlo, normal modes."""
import numpy as np
import pytest

from phonon_hop.constants import CODATA2018, TWO_PI
from phonon_hop.kerr_model import hopping_signal, kerr_chi, thermal_distribution
from phonon_hop.quantum_oracle import (
    IonCrystal,
    classical_normal_modes,
    equilibrium_crystal,
    evolve_amplitudes,
    evolve_single_phonon,
    finite_difference_hessian,
    monte_carlo_signal,
    sample_stretch_occupations,
)
from phonon_hop.trap_physics import (
    REFERENCE_SETTINGS_HZ,
    TrapConfig,
    mean_stretch_occupation,
    mode_spectrum,
    rms_velocity,
)

KAPPA = TWO_PI * 7.9e3
CHI = -TWO_PI * 0.13


class TestSinglePhononEvolution:
    def test_initial_time(self):
        assert evolve_single_phonon(KAPPA, CHI, 0, 0.0) == pytest.approx(0.0, abs=1e-30)

    def test_full_swap(self):
        for n_s in (0, 3, 10):
            assert evolve_single_phonon(KAPPA, 0.0, n_s, np.pi / KAPPA) == pytest.approx(
                1.0, abs=1e-12
            )

    def test_matches_closed_form_on_random_grid(self):
        rng = np.random.default_rng(11)
        times = rng.uniform(0.0, 30.0 / KAPPA * TWO_PI, size=64)
        for t in times:
            numeric = evolve_single_phonon(KAPPA, CHI, 3, t)
            exact = np.sin((KAPPA - 3 * CHI) * t / 2.0) ** 2
            assert numeric == pytest.approx(exact, abs=1e-10)

    def test_unitarity(self):
        rng = np.random.default_rng(12)
        for t in rng.uniform(0.0, 1.0, size=50):
            state = evolve_amplitudes(KAPPA, CHI, 2, t)
            assert state.norm == pytest.approx(1.0, abs=1e-12)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            evolve_single_phonon(KAPPA, CHI, -1, 1e-3)
        with pytest.raises(ValueError):
            evolve_single_phonon(KAPPA, CHI, 0, -1e-3)


class TestMonteCarloSignal:
    def test_zero_temperature_is_exact(self):
        times = np.linspace(0.0, 2e-3, 64)
        for seed in (0, 99):
            trace = monte_carlo_signal(KAPPA, CHI, 0.0, times, samples=10, seed=seed)
            np.testing.assert_allclose(trace.values, np.sin(KAPPA * times / 2) ** 2, atol=1e-12)

    def test_seed_determinism(self):
        times = np.linspace(0.0, 2e-3, 128)
        first = monte_carlo_signal(KAPPA, CHI, 27.7, times, samples=2000, seed=42)
        second = monte_carlo_signal(KAPPA, CHI, 27.7, times, samples=2000, seed=42)
        assert np.array_equal(first.values, second.values)
        other = monte_carlo_signal(KAPPA, CHI, 27.7, times, samples=2000, seed=43)
        assert not np.array_equal(first.values, other.values)

    def test_converges_to_thermal_sum(self):
        config = TrapConfig()
        spectrum = mode_spectrum(config)
        chi = kerr_chi(spectrum, config.omega_z, config.mass).chi
        mean_n = mean_stretch_occupation(
            rms_velocity(config.axial_temperature, config.mass),
            spectrum.omega_stretch, config.mass,
        )
        times = np.linspace(0.0, TWO_PI / abs(chi), 400)
        exact = hopping_signal(spectrum.kappa, chi, thermal_distribution(mean_n), times)
        estimate = monte_carlo_signal(spectrum.kappa, chi, mean_n, times,
                                      samples=100_000, seed=20240901)
        standard_error = 1.0 / (2.0 * np.sqrt(100_000))
        assert np.max(np.abs(estimate.values - exact.values)) < 5.0 * standard_error

    def test_unbiased_across_seeds(self):
        config = TrapConfig()
        spectrum = mode_spectrum(config)
        chi = kerr_chi(spectrum, config.omega_z, config.mass).chi
        mean_n = mean_stretch_occupation(
            rms_velocity(config.axial_temperature, config.mass),
            spectrum.omega_stretch, config.mass,
        )
        times = np.linspace(0.0, TWO_PI / abs(chi), 60)
        exact = hopping_signal(spectrum.kappa, chi, thermal_distribution(mean_n), times)
        samples = 20_000
        accumulated = np.zeros_like(times)
        n_seeds = 50
        for seed in range(n_seeds):
            accumulated += monte_carlo_signal(
                spectrum.kappa, chi, mean_n, times, samples=samples, seed=seed
            ).values
        mean_estimate = accumulated / n_seeds
        standard_error = 1.0 / (2.0 * np.sqrt(samples)) / np.sqrt(n_seeds)
        assert np.max(np.abs(mean_estimate - exact.values)) < 3.0 * standard_error

    def test_sampler_mean(self):
        rng = np.random.default_rng(5)
        draws = sample_stretch_occupations(27.7, 200_000, rng)
        # geometric distribution: std of the sample mean ~ mean_n / sqrt(N)
        assert draws.mean() == pytest.approx(27.7, abs=5 * 27.7 / np.sqrt(200_000))
        assert draws.min() >= 0

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            monte_carlo_signal(KAPPA, CHI, 27.7, np.array([0.0, 1e-3]), samples=0, seed=1)
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            sample_stretch_occupations(-1.0, 10, rng)


class TestClassicalNormalModes:
    @pytest.mark.parametrize("fy,fz", [(2.87e6, 213e3), (2.43e6, 140e3), (2.87e6, 50e3)])
    def test_matches_analytic_spectrum(self, fy, fz):
        config = TrapConfig(omega_y=TWO_PI * fy, omega_z=TWO_PI * fz)
        spectrum = mode_spectrum(config)
        expected = np.sort([
            spectrum.omega_com_z, spectrum.omega_stretch,
            spectrum.omega_rock, spectrum.omega_com_y,
        ])
        observed = classical_normal_modes(equilibrium_crystal(config))
        np.testing.assert_allclose(observed, expected, rtol=1e-6)

    def test_splitting_equals_hopping_rate(self):
        config = TrapConfig()
        modes = classical_normal_modes(equilibrium_crystal(config))
        kappa = mode_spectrum(config).kappa
        assert abs((modes[3] - modes[2]) - kappa) / kappa < 0.01

    def test_decoupling_limit(self):
        config = TrapConfig(omega_z=TWO_PI * 5e3)
        modes = classical_normal_modes(equilibrium_crystal(config))
        assert modes[2] == pytest.approx(config.omega_y, rel=1e-5)

    def test_equilibrium_force_balance(self):
        crystal = equilibrium_crystal(TrapConfig())
        d0 = abs(crystal.positions[0, 2] - crystal.positions[1, 2])
        restoring = crystal.mass * crystal.trap_frequencies[2] ** 2 * d0 / 2.0
        coulomb = CODATA2018.coulomb_coefficient / d0**2
        assert abs(restoring - coulomb) / restoring < 1e-10

    def test_rejects_non_equilibrium_crystal(self):
        config = TrapConfig()
        crystal = equilibrium_crystal(config)
        displaced = IonCrystal(
            positions=crystal.positions * 1.05,
            trap_frequencies=crystal.trap_frequencies,
            mass=crystal.mass,
        )
        with pytest.raises(ValueError, match="equilibrium"):
            classical_normal_modes(displaced)

    def test_hessian_symmetry(self):
        crystal = equilibrium_crystal(TrapConfig())
        hessian = finite_difference_hessian(crystal)
        asymmetry = np.max(np.abs(hessian - hessian.T))
        assert asymmetry < 1e-6 * np.max(np.abs(hessian))


@pytest.mark.parametrize("fy,fz", REFERENCE_SETTINGS_HZ)
def test_splitting_consistency_all_settings(fy, fz):
    config = TrapConfig(omega_y=TWO_PI * fy, omega_z=TWO_PI * fz)
    modes = classical_normal_modes(equilibrium_crystal(config))
    kappa = mode_spectrum(config).kappa
    assert abs((modes[3] - modes[2]) - kappa) / kappa < 0.01
