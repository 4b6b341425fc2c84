"""Interaction-free preparation of a narrow atom beam with a neutron
Mach-Zehnder interferometer."""

from .amplitudes import (
    GD157,
    CrossSections,
    InteractionAmplitudes,
    UnitarityReport,
    compute_c,
    forward_amplitude_from_optical_theorem,
    from_cross_sections,
    unitarity_report,
)
from .errors import (
    AmplitudeOverflow,
    DegenerateSelection,
    EmptySelection,
    GridTooCoarse,
    NumericalDomainError,
    ZeroOverlap,
)
from .interferometer import (
    NetworkSpec,
    OutcomeDistribution,
    PathAmplitudes,
    outcome_distribution,
    path_amplitudes,
)
from .joint_state import (
    AtomState,
    BeamGeometry,
    JointState,
    PostSelectionResult,
    approx_d2_amplitude,
    atom_from_geometry,
    compare_exact_approx,
    evolve_overlap,
    postselect_d2,
)

__version__ = "0.1.0"

__all__ = [
    "GD157",
    "AmplitudeOverflow",
    "AtomState",
    "BeamGeometry",
    "CrossSections",
    "DegenerateSelection",
    "EmptySelection",
    "GridTooCoarse",
    "InteractionAmplitudes",
    "JointState",
    "NetworkSpec",
    "NumericalDomainError",
    "OutcomeDistribution",
    "PathAmplitudes",
    "PostSelectionResult",
    "UnitarityReport",
    "ZeroOverlap",
    "approx_d2_amplitude",
    "atom_from_geometry",
    "compare_exact_approx",
    "compute_c",
    "evolve_overlap",
    "forward_amplitude_from_optical_theorem",
    "from_cross_sections",
    "outcome_distribution",
    "path_amplitudes",
    "postselect_d2",
    "unitarity_report",
]
