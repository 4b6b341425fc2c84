"""Two-path Mach-Zehnder network with an absorber in path I.

Conventions: reflection at a splitter of reflectivity ``r`` multiplies the
amplitude by ``i*sqrt(r)``, transmission by ``sqrt(1 - r)``; each arm has one
full mirror (a reflection with ``r = 1``). The source beam transmitted at the
first splitter is path I, and D2 receives path I in transmission. With 50/50
splitters this gives amplitudes ``i/2`` and ``-i/2`` towards D2.
"""

from __future__ import annotations

import math
import cmath
from dataclasses import dataclass

from .amplitudes import InteractionAmplitudes

MIRROR = 1j


def _reflect(r: float) -> complex:
    return complex(0.0, math.sqrt(r))


def _transmit(r: float) -> complex:
    return complex(math.sqrt(1.0 - r), 0.0)


@dataclass(frozen=True)
class NetworkSpec:
    bs1_reflectivity: float = 0.5
    bs2_reflectivity: float = 0.5
    extra_phase_I: float = 0.0
    extra_phase_II: float = 0.0

    def __post_init__(self):
        for name in ("bs1_reflectivity", "bs2_reflectivity"):
            r = getattr(self, name)
            if not 0.0 <= r <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {r!r}")


@dataclass(frozen=True)
class PathAmplitudes:
    """Amplitudes for entering each arm and for leaving it towards a detector.

    The products ``enter * exit`` are the per-route amplitudes relative to a
    unit input amplitude; they are exposed as ``to_d1_via_I`` and friends.
    """

    enter_I: complex
    enter_II: complex
    exit_I_d1: complex
    exit_I_d2: complex
    exit_II_d1: complex
    exit_II_d2: complex

    @property
    def to_d1_via_I(self) -> complex:
        return self.enter_I * self.exit_I_d1

    @property
    def to_d2_via_I(self) -> complex:
        return self.enter_I * self.exit_I_d2

    @property
    def to_d1_via_II(self) -> complex:
        return self.enter_II * self.exit_II_d1

    @property
    def to_d2_via_II(self) -> complex:
        return self.enter_II * self.exit_II_d2

    def exit(self, path: str, detector: str) -> complex:
        return getattr(self, f"exit_{path}_{detector}")


def path_amplitudes(spec: NetworkSpec = NetworkSpec()) -> PathAmplitudes:
    r1, r2 = spec.bs1_reflectivity, spec.bs2_reflectivity
    phase_I = cmath.exp(1j * spec.extra_phase_I) if spec.extra_phase_I else 1
    phase_II = cmath.exp(1j * spec.extra_phase_II) if spec.extra_phase_II else 1
    # Path I arrives at BS2 travelling towards D2, path II towards D1.
    return PathAmplitudes(
        enter_I=_transmit(r1) * phase_I,
        enter_II=_reflect(r1) * phase_II,
        exit_I_d1=MIRROR * _reflect(r2),
        exit_I_d2=MIRROR * _transmit(r2),
        exit_II_d1=MIRROR * _transmit(r2),
        exit_II_d2=MIRROR * _reflect(r2),
    )


@dataclass(frozen=True)
class OutcomeDistribution:
    p_d1: float
    p_d2: float
    p_absorbed: float
    p_scattered: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.p_d1, self.p_d2, self.p_absorbed, self.p_scattered)

    @property
    def total(self) -> float:
        return math.fsum(self.as_tuple())


def outcome_distribution(
    spec: NetworkSpec,
    amps: InteractionAmplitudes,
    atom_present: bool,
) -> OutcomeDistribution:
    """Detector, absorption and scattering probabilities for one neutron.

    With the atom in the window the path-I wave continues coherently with
    amplitude ``c + s0``; absorption and inelastic scattering remove the
    neutron from the interferometer and carry the path-I occupation.
    """
    paths = path_amplitudes(spec)
    if not atom_present:
        return OutcomeDistribution(
            p_d1=abs(paths.to_d1_via_I + paths.to_d1_via_II) ** 2,
            p_d2=abs(paths.to_d2_via_I + paths.to_d2_via_II) ** 2,
            p_absorbed=0.0,
            p_scattered=0.0,
        )
    coherent = amps.c + amps.s0
    occupation_I = abs(paths.enter_I) ** 2
    return OutcomeDistribution(
        p_d1=abs(paths.to_d1_via_I * coherent + paths.to_d1_via_II) ** 2,
        p_d2=abs(paths.to_d2_via_I * coherent + paths.to_d2_via_II) ** 2,
        p_absorbed=amps.p_absorb * occupation_I,
        p_scattered=amps.p_inelastic * occupation_I,
    )
