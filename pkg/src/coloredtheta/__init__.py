"""Classical and quantum bounds for simple and bicolored exclusivity graphs."""

from .classical import alpha, classical_membership, independent_sets
from .graphs import (ColoredGraph, Event, SimpleGraph, build_colored_graph,
                     build_exclusivity_graph, builtin, chsh_colored, chsh_shadow,
                     colored_isomorphic, enumerate_shadow_family, family_label, load_graph,
                     shadow)
from .npa import build_relaxation, canonicalize, colored_membership_upper, theta_colored_upper
from .realizations import (Realization, behavior_from_realization, bloch_projector,
                           chsh_interpolation, g3333_qutrit_point, g441111_interpolation,
                           naimark_dilate, pair_expectation, purify, seesaw)
from .sdp import SdpProblem, SdpSolution, SolverError, solve
from .sweeps import WeightPath, detect_kink, find_separating_weight, sweep, weight_at
from .theta import extract_orthonormal_representation, theta, theta_body_membership

__all__ = [
    "alpha",
    "behavior_from_realization",
    "bloch_projector",
    "build_colored_graph",
    "build_exclusivity_graph",
    "build_relaxation",
    "builtin",
    "canonicalize",
    "chsh_colored",
    "chsh_interpolation",
    "chsh_shadow",
    "classical_membership",
    "colored_isomorphic",
    "colored_membership_upper",
    "ColoredGraph",
    "detect_kink",
    "enumerate_shadow_family",
    "Event",
    "extract_orthonormal_representation",
    "family_label",
    "find_separating_weight",
    "g3333_qutrit_point",
    "g441111_interpolation",
    "independent_sets",
    "load_graph",
    "naimark_dilate",
    "pair_expectation",
    "purify",
    "Realization",
    "SdpProblem",
    "SdpSolution",
    "seesaw",
    "shadow",
    "SimpleGraph",
    "solve",
    "SolverError",
    "sweep",
    "theta",
    "theta_body_membership",
    "theta_colored_upper",
    "weight_at",
    "WeightPath",
]

__version__ = "0.1.0"
