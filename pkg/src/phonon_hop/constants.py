"""Physical constants (CODATA 2018), compiled in for reproducibility."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi

ATOMIC_MASS_UNIT = 1.66053906660e-27  # kg


@dataclass(frozen=True)
class PhysicalConstants:
    """Fixed set of SI constants used throughout the package.

    All values are CODATA 2018. The calcium mass is 39.9625909 u
    converted to kg.
    """

    elementary_charge: float = 1.602176634e-19      # C
    vacuum_permittivity: float = 8.8541878128e-12   # F/m
    reduced_planck: float = 1.054571817e-34         # J s
    boltzmann: float = 1.380649e-23                 # J/K
    fine_structure: float = 7.2973525693e-3
    speed_of_light: float = 299792458.0             # m/s
    ca40_mass: float = 39.9625909 * ATOMIC_MASS_UNIT  # kg

    def __post_init__(self) -> None:
        for name, value in vars(self).items():
            if not value > 0:
                raise ValueError(f"constant {name} must be positive, got {value}")

    @property
    def coulomb_coefficient(self) -> float:
        """e^2 / (4 pi eps0) in J m."""
        return self.elementary_charge**2 / (4.0 * np.pi * self.vacuum_permittivity)


CODATA2018 = PhysicalConstants()
