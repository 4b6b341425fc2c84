"""Single-encounter neutron/atom interaction amplitudes.

A neutron in path I that overlaps the atom window either passes untouched
(survival amplitude ``c``), scatters forward without changing either state
(``s0``), scatters into a momentum-exchanging channel (``s_inel``), or is
absorbed (``z``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .errors import AmplitudeOverflow

BARN = 1e-28  # m^2, exact
FEMTOMETER = 1e-15
EPS_NUM = 1e-12


def compute_c(s: Sequence[complex], z: complex) -> float:
    """Survival amplitude ``sqrt(1 - sum|s_l|^2 - |z|^2)``.

    ``s`` holds every scattering amplitude including the forward one.
    A radicand that is negative by no more than ``EPS_NUM`` is clamped to 0.
    """
    lost = math.fsum(abs(a) ** 2 for a in s) + abs(z) ** 2
    if lost > 1.0 + EPS_NUM:
        raise AmplitudeOverflow(
            f"interaction probabilities sum to {lost!r} > 1"
        )
    return math.sqrt(max(1.0 - lost, 0.0))


@dataclass(frozen=True)
class InteractionAmplitudes:
    s0: complex = 0j
    s_inel: tuple[complex, ...] = field(default_factory=tuple)
    z: complex = 0j

    def __post_init__(self):
        object.__setattr__(self, "s0", complex(self.s0))
        object.__setattr__(self, "z", complex(self.z))
        object.__setattr__(
            self, "s_inel", tuple(complex(a) for a in self.s_inel)
        )
        compute_c(self.all_scattering, self.z)

    @property
    def all_scattering(self) -> tuple[complex, ...]:
        return (self.s0,) + self.s_inel

    @property
    def c(self) -> float:
        return compute_c(self.all_scattering, self.z)

    @property
    def p_scatter_total(self) -> float:
        """Sum of |s_l|^2 over all channels, forward included."""
        return math.fsum(abs(a) ** 2 for a in self.all_scattering)

    @property
    def p_inelastic(self) -> float:
        return math.fsum(abs(a) ** 2 for a in self.s_inel)

    @property
    def p_absorb(self) -> float:
        return abs(self.z) ** 2


@dataclass(frozen=True)
class CrossSections:
    """Reaction cross sections in barns and neutron wavenumber in 1/m.

    A zero scattering cross section is accepted so that an ideal black
    absorber can be described.
    """

    sigma_abs: float
    sigma_scat: float
    wavenumber_k: float = 2 * math.pi / 1.8e-10

    def __post_init__(self):
        if not self.sigma_abs > 0:
            raise ValueError("sigma_abs must be positive")
        if not self.sigma_scat >= 0:
            raise ValueError("sigma_scat must be non-negative")
        if not self.wavenumber_k > 0:
            raise ValueError("wavenumber_k must be positive")

    @property
    def sigma_total(self) -> float:
        return self.sigma_abs + self.sigma_scat

    @property
    def scat_to_abs(self) -> float:
        return self.sigma_scat / self.sigma_abs


# 157Gd with thermal neutrons; the scattering value is an order of magnitude.
GD157 = CrossSections(sigma_abs=2.5e5, sigma_scat=10.0)
PRESETS = {"gd157": GD157}


def from_cross_sections(
    cs: CrossSections, z_mag_sq: float, inelastic_split: float
) -> InteractionAmplitudes:
    """Build amplitudes whose scattering/absorption ratio follows ``cs``.

    ``z_mag_sq`` is the absorption probability per encounter. The total
    scattering probability is ``z_mag_sq * sigma_scat / sigma_abs``; a
    fraction ``inelastic_split`` of it goes into one aggregate inelastic
    channel and the rest into forward scattering, which is taken purely
    imaginary so that the coherent channel conserves probability.
    """
    if not 0.0 <= z_mag_sq <= 1.0:
        raise ValueError("z_mag_sq must lie in [0, 1]")
    if not 0.0 <= inelastic_split <= 1.0:
        raise ValueError("inelastic_split must lie in [0, 1]")
    p_scat = z_mag_sq * cs.scat_to_abs
    if z_mag_sq + p_scat > 1.0 + EPS_NUM:
        raise AmplitudeOverflow(
            f"z_mag_sq={z_mag_sq!r} leaves no room for scattering "
            f"probability {p_scat!r}"
        )
    p_inel = inelastic_split * p_scat
    p_fwd = p_scat - p_inel
    s_inel = (complex(math.sqrt(p_inel)),) if p_inel > 0 else ()
    return InteractionAmplitudes(
        s0=complex(0.0, math.sqrt(p_fwd)),
        s_inel=s_inel,
        z=complex(math.sqrt(z_mag_sq)),
    )


def forward_amplitude_from_optical_theorem(cs: CrossSections) -> float:
    """Im f(0) = k * sigma_tot / (4 pi), returned in femtometres."""
    return cs.wavenumber_k * cs.sigma_total * BARN / (4 * math.pi) / FEMTOMETER


@dataclass(frozen=True)
class UnitarityReport:
    total_probability: float
    defect: float
    re_s0: float


def unitarity_report(amps: InteractionAmplitudes) -> UnitarityReport:
    total = (
        abs(amps.c + amps.s0) ** 2 + amps.p_inelastic + amps.p_absorb
    )
    return UnitarityReport(
        total_probability=total, defect=total - 1.0, re_s0=amps.s0.real
    )
