"""Physical constants and unit conventions.

Conventions used throughout the package:

* frequencies, couplings, and rates are *angular* (rad/s),
* magnetic fields are in tesla,
* positions are in nanometres,
* times are in seconds.

Gyromagnetic ratios are signed.  The electron value corresponds to
-2.8 MHz/G; nuclear values are the usual tabulated ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

TWO_PI = 2.0 * math.pi

#: Conversion factor gauss -> tesla.
TESLA_PER_GAUSS = 1e-4

#: Reduced Planck constant, J*s.
HBAR = 1.054571817e-34

#: mu_0 / 4 pi, T*m/A.
MU0_OVER_4PI = 1e-7


def gauss(value: float) -> float:
    """Magnetic field given in gauss, returned in tesla."""
    return value * TESLA_PER_GAUSS


@dataclass(frozen=True)
class PhysicalConstants:
    """Bundle of the physical constants the simulator depends on.

    All frequencies are angular (rad/s); gyromagnetic ratios are in
    rad/s/T and signed.
    """

    #: electron gyromagnetic ratio (negative), rad/s/T
    gamma_e: float = -TWO_PI * 2.8e10
    #: NV ground-state zero-field splitting, rad/s
    zero_field_splitting: float = TWO_PI * 2.87e9
    #: nuclear gyromagnetic ratios by species, rad/s/T
    gamma_nuclear: dict[str, float] = field(
        default_factory=lambda: {
            "13C": TWO_PI * 10.705e6,
            "1H": TWO_PI * 42.577e6,
            "14N": TWO_PI * 3.08e6,
        }
    )
    #: spin quantum number by species
    spin_number: dict[str, float] = field(
        default_factory=lambda: {"13C": 0.5, "1H": 0.5, "14N": 1.0}
    )
    #: intrinsic 14N hyperfine, transverse component, rad/s
    nitrogen_a_perp: float = -TWO_PI * 2.62e6
    #: intrinsic 14N hyperfine, longitudinal component, rad/s
    nitrogen_a_parallel: float = -TWO_PI * 2.162e6
    #: 14N quadrupole splitting, rad/s
    nitrogen_quadrupole: float = -TWO_PI * 4.945e6
    #: reduced Planck constant, J*s
    hbar: float = HBAR
    #: mu_0 / 4 pi, T*m/A
    mu0_over_4pi: float = MU0_OVER_4PI

    def gamma(self, species: str) -> float:
        """Gyromagnetic ratio of a nuclear species (rad/s/T)."""
        try:
            return self.gamma_nuclear[species]
        except KeyError:
            raise_unknown_species(species, self.gamma_nuclear)
        raise AssertionError("unreachable")

    def spin(self, species: str) -> float:
        """Spin quantum number of a nuclear species."""
        try:
            return self.spin_number[species]
        except KeyError:
            raise_unknown_species(species, self.spin_number)
        raise AssertionError("unreachable")

    def multiplicity(self, species: str) -> int:
        """Hilbert-space dimension of one spin of the given species."""
        return int(round(2.0 * self.spin(species) + 1.0))


def raise_unknown_species(species: str, table: dict[str, float]) -> None:
    from .errors import DomainError

    known = ", ".join(sorted(table))
    raise DomainError(f"unknown nuclear species {species!r} (known: {known})")


#: Default constants instance used when none is supplied explicitly.
CONSTANTS = PhysicalConstants()
