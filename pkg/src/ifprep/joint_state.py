"""Joint neutron/atom state and post-selection on a D2 click.

The atom's transverse state is split into the part ``R`` inside the window
crossed by neutron path I and the remainder ``0``. After the overlap the
joint state is a list of terms (neutron channel, atom component, amplitude);
projecting the coherent channels onto D2 yields the conditional atom state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .amplitudes import InteractionAmplitudes
from .errors import DegenerateSelection
from .interferometer import NetworkSpec, PathAmplitudes, path_amplitudes


@dataclass(frozen=True)
class BeamGeometry:
    """Neutron and atom beam widths in micrometres."""

    w_n: float = 10.0
    w_Gd: float = 1000.0

    def __post_init__(self):
        if not self.w_n > 0:
            raise ValueError("w_n must be positive")
        if not self.w_n <= self.w_Gd:
            raise ValueError(f"w_n exceeds w_Gd ({self.w_n!r} > {self.w_Gd!r})")

    @property
    def window_fraction(self) -> float:
        return self.w_n / self.w_Gd


@dataclass(frozen=True)
class AtomState:
    amp_R: complex
    amp_0: complex

    @property
    def weight_R(self) -> float:
        return abs(self.amp_R) ** 2

    @property
    def norm(self) -> float:
        return abs(self.amp_R) ** 2 + abs(self.amp_0) ** 2


def atom_from_geometry(geom: BeamGeometry) -> AtomState:
    """Uniform transverse density: the window holds a fraction w_n/w_Gd."""
    f = geom.window_fraction
    return AtomState(amp_R=complex(math.sqrt(f)), amp_0=complex(math.sqrt(1.0 - f)))


class Channel(str, Enum):
    PATH_I = "path_I_coherent"
    PATH_II = "path_II"
    ABSORBED = "absorbed"
    SCATTERED = "scattered"


@dataclass(frozen=True)
class Term:
    channel: Channel
    atom: str  # "R" or "0"
    amplitude: complex
    index: int = 0  # inelastic channel label, 1-based; 0 otherwise


@dataclass(frozen=True)
class JointState:
    terms: tuple[Term, ...]
    atom: AtomState
    amps: InteractionAmplitudes

    @property
    def norm(self) -> float:
        return math.fsum(abs(t.amplitude) ** 2 for t in self.terms)

    def select(self, channel: Channel, atom: str | None = None) -> list[Term]:
        return [
            t for t in self.terms
            if t.channel is channel and (atom is None or t.atom == atom)
        ]


def evolve_overlap(
    atom: AtomState,
    amps: InteractionAmplitudes,
    network: NetworkSpec = NetworkSpec(),
) -> JointState:
    paths = path_amplitudes(network)
    occ_I, occ_II = paths.enter_I, paths.enter_II
    terms = [
        Term(Channel.PATH_I, "0", occ_I * atom.amp_0),
        Term(Channel.PATH_I, "R", occ_I * (amps.c + amps.s0) * atom.amp_R),
    ]
    if atom.amp_R != 0:
        terms.append(Term(Channel.ABSORBED, "R", occ_I * amps.z * atom.amp_R))
        terms.extend(
            Term(Channel.SCATTERED, "R", occ_I * s * atom.amp_R, index=l)
            for l, s in enumerate(amps.s_inel, start=1)
        )
    terms += [
        Term(Channel.PATH_II, "R", occ_II * atom.amp_R),
        Term(Channel.PATH_II, "0", occ_II * atom.amp_0),
    ]
    return JointState(tuple(terms), atom, amps)


@dataclass(frozen=True)
class PostSelectionResult:
    atom_state: AtomState
    probability: float
    exact_amplitude: complex  # D2 amplitude per unit amp_R
    approx_amplitude: complex
    amplitude_0: complex  # residual D2 amplitude carried by the outside component


def _d2_amplitude(joint: JointState, paths: PathAmplitudes, atom: str) -> complex:
    via_I = sum(t.amplitude for t in joint.select(Channel.PATH_I, atom))
    via_II = sum(t.amplitude for t in joint.select(Channel.PATH_II, atom))
    return via_I * paths.exit_I_d2 + via_II * paths.exit_II_d2


def postselect_d2(joint: JointState, paths: PathAmplitudes) -> PostSelectionResult:
    """Project the joint state onto a D2 click.

    Absorbed and scattered terms are orthogonal final states and never reach
    D2. For a balanced network the outside component ``0`` cancels exactly,
    so the conditional atom state is confined to the window.
    """
    d2_R = _d2_amplitude(joint, paths, "R")
    d2_0 = _d2_amplitude(joint, paths, "0")
    probability = abs(d2_R) ** 2 + abs(d2_0) ** 2
    if probability == 0.0:
        raise DegenerateSelection("D2 cannot fire: the dark port stays dark")
    norm = math.sqrt(probability)
    amp_R = joint.atom.amp_R
    return PostSelectionResult(
        atom_state=AtomState(amp_R=d2_R / norm, amp_0=d2_0 / norm),
        probability=probability,
        exact_amplitude=d2_R / amp_R if amp_R != 0 else 0j,
        approx_amplitude=approx_d2_amplitude(joint.amps),
        amplitude_0=d2_0,
    )


def approx_d2_amplitude(amps: InteractionAmplitudes) -> complex:
    """Leading-order D2 amplitude ``-(i/4)|z|^2`` for weak absorption."""
    return complex(0.0, -0.25 * amps.p_absorb)


def exact_d2_amplitude(
    amps: InteractionAmplitudes, network: NetworkSpec = NetworkSpec()
) -> complex:
    """D2 amplitude per unit window amplitude, ``(i/2)(c + s0 - 1)`` for 50/50."""
    paths = path_amplitudes(network)
    return paths.to_d2_via_I * (amps.c + amps.s0) + paths.to_d2_via_II


def compare_exact_approx(
    amps: InteractionAmplitudes, network: NetworkSpec = NetworkSpec()
) -> float:
    """Relative error of the weak-absorption form against the exact amplitude."""
    exact = exact_d2_amplitude(amps, network)
    if exact == 0:
        raise DegenerateSelection("exact D2 amplitude vanishes")
    return abs(exact - approx_d2_amplitude(amps)) / abs(exact)


def scattering_share_of_d2(amps: InteractionAmplitudes) -> float:
    """Fraction of the D2 probability that depends on the scattering amplitudes.

    The rest is frustrated absorption: the same click rate with every
    ``s_l`` set to zero and ``|z|`` unchanged.
    """
    with_s = abs(amps.c + amps.s0 - 1.0) ** 2
    if with_s == 0:
        raise DegenerateSelection("exact D2 amplitude vanishes")
    c_abs_only = math.sqrt(1.0 - amps.p_absorb)
    return abs(with_s - (c_abs_only - 1.0) ** 2) / with_s


@dataclass(frozen=True)
class RegimeReport:
    """Ratios behind the weak-absorption approximation, reported separately."""

    absorb_over_scatter: float  # |z|^2 / sum_l |s_l|^2
    absorb_over_forward: float  # |z|^2 / |s0|
    absorb_probability: float

    def holds(self, factor: float = 100.0) -> bool:
        return (
            self.absorb_over_scatter >= factor
            and self.absorb_over_forward >= factor
        )


def regime_report(amps: InteractionAmplitudes) -> RegimeReport:
    def ratio(num, den):
        return math.inf if den == 0 else num / den

    return RegimeReport(
        absorb_over_scatter=ratio(amps.p_absorb, amps.p_scatter_total),
        absorb_over_forward=ratio(amps.p_absorb, abs(amps.s0)),
        absorb_probability=amps.p_absorb,
    )
