"""Saddle-mediated transport structures for 2-DOF Hamiltonian systems.

Unstable periodic orbits around index-1 saddles, their invariant-manifold
tubes, homoclinic/heteroclinic connections between them, and shadowing
itineraries realizing symbolic walks on the connection graph — for the
physical double pendulum, the point-mass double pendulum, and the planar
circular restricted three-body problem.
"""

__version__ = "0.1.0"

from .errors import (
    SaddleTubesError,
    DriftExceeded,
    MaxStepsExceeded,
    NoEventWithinMaxTime,
    NewtonDiverged,
    EnergyBelowSaddle,
    RefinementDiverged,
    AsymptoticsFailed,
    WrapsTooSmall,
)
from .models import (
    REVERSER,
    SystemModel,
    PhysicalPendulum,
    PointMassPendulum,
    PCR3BP,
    apply_reverser,
    hills_region_grid,
    model_from_config,
)
from .sections import SectionSpec, PlaneSection
from .integrate import (
    IntegratorConfig,
    DEFAULT_CONFIG,
    Trajectory,
    CrossingEvent,
    integrate,
    flow,
    integrate_to_event,
    integrate_variational,
    trajectory_to_csv,
)
from .equilibria import (
    Equilibrium,
    SaddleFrame,
    classify_equilibrium,
    enumerate_equilibria,
    equilibrium_by_label,
    solve_lagrange_quintic,
)
from .upo import (
    PeriodicOrbit,
    find_symmetric_upo,
    compute_floquet,
    continue_family,
    upo_at_energy,
    sample_orbit,
)
from .manifolds import (
    UNSTABLE,
    STABLE,
    TubeBranch,
    SectionCut,
    seed_tube,
    globalize_tube,
    interior_iterate,
    polyline_distance,
    polygon_contains,
    section_state_at_energy,
)
from .connections import (
    CandidateIntersection,
    ConnectionOrbit,
    SampledPath,
    intersect_cuts,
    refine_connection,
    homoclinic_cuts,
    find_homoclinics,
    find_heteroclinics,
    heteroclinics_between_saddles,
    reverse_connection,
)
from .itinerary import (
    ConnectionGraph,
    Edge,
    Walk,
    ShadowSpec,
    ShadowOrbit,
    build_graph,
    enumerate_walks,
    construct_shadow_orbit,
    verify_shadow_periodicity,
)

__all__ = [
    "__version__",
    "SaddleTubesError",
    "DriftExceeded",
    "MaxStepsExceeded",
    "NoEventWithinMaxTime",
    "NewtonDiverged",
    "EnergyBelowSaddle",
    "RefinementDiverged",
    "AsymptoticsFailed",
    "WrapsTooSmall",
    "REVERSER",
    "SystemModel",
    "PhysicalPendulum",
    "PointMassPendulum",
    "PCR3BP",
    "apply_reverser",
    "hills_region_grid",
    "model_from_config",
    "SectionSpec",
    "PlaneSection",
    "IntegratorConfig",
    "DEFAULT_CONFIG",
    "Trajectory",
    "CrossingEvent",
    "integrate",
    "flow",
    "integrate_to_event",
    "integrate_variational",
    "trajectory_to_csv",
    "Equilibrium",
    "SaddleFrame",
    "classify_equilibrium",
    "enumerate_equilibria",
    "equilibrium_by_label",
    "solve_lagrange_quintic",
    "PeriodicOrbit",
    "find_symmetric_upo",
    "compute_floquet",
    "continue_family",
    "upo_at_energy",
    "sample_orbit",
    "UNSTABLE",
    "STABLE",
    "TubeBranch",
    "SectionCut",
    "seed_tube",
    "globalize_tube",
    "interior_iterate",
    "polyline_distance",
    "polygon_contains",
    "section_state_at_energy",
    "CandidateIntersection",
    "ConnectionOrbit",
    "SampledPath",
    "intersect_cuts",
    "refine_connection",
    "homoclinic_cuts",
    "find_homoclinics",
    "find_heteroclinics",
    "heteroclinics_between_saddles",
    "reverse_connection",
    "ConnectionGraph",
    "Edge",
    "Walk",
    "ShadowSpec",
    "ShadowOrbit",
    "build_graph",
    "enumerate_walks",
    "construct_shadow_orbit",
    "verify_shadow_periodicity",
]
