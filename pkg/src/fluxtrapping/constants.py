"""Physical constants and unit conversions used across the package.

Energies are carried as E/h in GHz, phases in radians, times in
microseconds and decay rates in 1/us. SI quantities (ring currents,
inductances, temperatures) are used only where they appear naturally.
"""

import math

from scipy import constants as _sc

H = _sc.h
HBAR = _sc.hbar
K_B = _sc.k
E_CHARGE = _sc.e

#: Magnetic flux quantum h/2e in Wb.
PHI0 = 2.067833848e-15

GHZ = 1e9
US = 1e-6

#: Coil current producing one flux quantum in the trapping ring (A).
DEFAULT_CURRENT_PER_PHI0 = 540e-9

TWO_PI = 2.0 * math.pi


def rate_per_us_to_per_s(rate: float) -> float:
    return rate * 1e6


def rate_per_s_to_per_us(rate: float) -> float:
    return rate * 1e-6


def rate_from_khz_over_2pi(value_khz: float) -> float:
    """Convert a rate quoted as Gamma/2pi in kHz to Gamma in 1/us."""
    return TWO_PI * value_khz * 1e-3


def angular_dispersion(df01_dphi: float) -> float:
    """Convert df01/dphi_ext (GHz/rad) to d(omega01)/d(Phi_ext) in rad/s per Phi0."""
    return TWO_PI * GHZ * TWO_PI * df01_dphi
