"""Radial local-phonon hopping between two trapped ions.

Simulation and analysis toolkit for the Kerr-nonlinearity decoherence of
phonon hopping in a two-ion chain: trap-derived quantities, the thermally
averaged hopping signal with its closed-form envelope, brute-force
oracles, and a damped-sinusoid fitting pipeline.
"""
from .constants import CODATA2018, PhysicalConstants
from .kerr_model import (
    CoherenceMetrics,
    HoppingTrace,
    KerrCoupling,
    ResonanceError,
    ThermalDistribution,
    coherence_metrics,
    envelope_closed_form,
    hopping_signal,
    kerr_chi,
    rocking_shift,
    thermal_distribution,
)
from .quantum_oracle import (
    IonCrystal,
    SinglePhononState,
    classical_normal_modes,
    equilibrium_crystal,
    evolve_single_phonon,
    monte_carlo_signal,
)
from .signal_analysis import (
    DampedSineFit,
    DampedSineFitter,
    FitMetrics,
    GuessQualityWarning,
    TimeSeries,
    damped_sine,
    fit_damped_sine,
    initial_guess,
    metrics_from_fit,
)
from .trap_physics import (
    DistanceConvention,
    ModeSpectrum,
    TrapConfig,
    axial_freq_to_distance,
    distance_to_axial_freq,
    doppler_temperature,
    hopping_rate,
    mean_stretch_occupation,
    mode_spectrum,
    modified_lamb_dicke,
    rms_velocity,
)

__version__ = "0.1.0"

__all__ = [
    "CODATA2018",
    "CoherenceMetrics",
    "DampedSineFit",
    "DampedSineFitter",
    "DistanceConvention",
    "FitMetrics",
    "GuessQualityWarning",
    "HoppingTrace",
    "IonCrystal",
    "KerrCoupling",
    "ModeSpectrum",
    "PhysicalConstants",
    "ResonanceError",
    "SinglePhononState",
    "ThermalDistribution",
    "TimeSeries",
    "TrapConfig",
    "axial_freq_to_distance",
    "classical_normal_modes",
    "coherence_metrics",
    "damped_sine",
    "distance_to_axial_freq",
    "doppler_temperature",
    "envelope_closed_form",
    "equilibrium_crystal",
    "evolve_single_phonon",
    "fit_damped_sine",
    "hopping_rate",
    "hopping_signal",
    "initial_guess",
    "kerr_chi",
    "mean_stretch_occupation",
    "metrics_from_fit",
    "mode_spectrum",
    "modified_lamb_dicke",
    "monte_carlo_signal",
    "rms_velocity",
    "rocking_shift",
    "thermal_distribution",
]
