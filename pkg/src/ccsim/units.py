"""Unit conventions and conversions.

All internal frequencies are dimensionless, expressed in units of ``2*pi*c/a``
where ``a`` is the lattice constant; times are in units of ``a/(2*pi*c)``.
With this pairing a phase is simply ``omega * t`` (no stray 2*pi), and a power
decay rate ``Gamma`` in frequency units satisfies ``n(t) = exp(-Gamma * t)``.

Conversions to laboratory units (rad/s, THz, joules) always require the
lattice constant.
"""

import numpy as np
from scipy.constants import c as C_LIGHT, hbar as HBAR


def frequency_unit(a_nm: float) -> float:
    """Return 2*pi*c/a in rad/s for a lattice constant given in nm."""
    if a_nm <= 0:
        raise ValueError("lattice constant must be positive")
    return 2.0 * np.pi * C_LIGHT / (a_nm * 1e-9)


def omega_to_rad_per_s(omega: float, a_nm: float) -> float:
    """Convert a frequency in 2*pi*c/a units to rad/s."""
    return omega * frequency_unit(a_nm)


def omega_to_thz(omega: float, a_nm: float) -> float:
    """Convert a frequency in 2*pi*c/a units to an ordinary frequency in THz."""
    return omega * C_LIGHT / (a_nm * 1e-9) / 1e12


def rate_to_internal(rate_per_s: complex, a_nm: float) -> complex:
    """Convert a rate in 1/s to 2*pi*c/a units."""
    return rate_per_s / frequency_unit(a_nm)


def photon_energy_J(omega: float, a_nm: float) -> float:
    """Energy of one photon at frequency ``omega`` (2*pi*c/a units)."""
    return HBAR * omega_to_rad_per_s(omega, a_nm)


def photons_from_energy(energy_fJ: float, omega: float, a_nm: float) -> float:
    """Photon count corresponding to a pulse energy in femtojoules."""
    return energy_fJ * 1e-15 / photon_energy_J(omega, a_nm)
