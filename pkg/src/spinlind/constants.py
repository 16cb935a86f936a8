"""Physical constants (CODATA 2018) and unit conversions.

All angular frequencies inside the library are in rad/s, distances in
metres unless a name says otherwise, and times in seconds except for the
public time grids, which are in milliseconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

ANGSTROM = 1e-10
AMU = 1.66053906660e-27  # kg
SPEED_OF_LIGHT = 299792458.0  # m/s
MHZ_TO_RAD_S = 2.0 * math.pi * 1e6


# gamma in rad s^-1 T^-1; 1H from CODATA 2018, the rest from nuclear moment tables
_ISOTOPE_GAMMAS = {
    "1H": 2.6752218744e8,
    "51V": 7.0455117e7,
    "63Cu": 7.1117890e7,
    "77Se": 5.1253857e7,
    "33S": 2.0556850e7,
}


@dataclass(frozen=True)
class PhysicalConstants:
    """Immutable bundle of the constants the rate and hyperfine models need."""

    hbar: float = 1.054571817e-34  # J s
    mu0: float = 1.25663706212e-6  # T^2 m^3 / J
    bohr_magneton: float = 9.2740100783e-24  # J / T
    gammas: Mapping[str, float] = field(
        default_factory=lambda: MappingProxyType(dict(_ISOTOPE_GAMMAS))
    )

    def gamma(self, isotope: str) -> float:
        try:
            return self.gammas[isotope]
        except KeyError:
            raise KeyError(f"no reference gyromagnetic ratio for isotope {isotope!r}") from None

    def electron_gamma(self, g: float) -> float:
        """Electron gyromagnetic ratio magnitude g*mu_B/hbar in rad s^-1 T^-1."""
        return g * self.bohr_magneton / self.hbar


CODATA2018 = PhysicalConstants()


def mhz_to_rad_s(value):
    return value * MHZ_TO_RAD_S


def rad_s_to_mhz(value):
    return value / MHZ_TO_RAD_S


def wavenumber_to_rad_s(nu_cm1: float) -> float:
    """Convert a vibrational wavenumber (cm^-1) to angular frequency (rad/s)."""
    return 2.0 * math.pi * SPEED_OF_LIGHT * 100.0 * nu_cm1
