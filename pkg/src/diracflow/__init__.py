"""Structure-preserving implicit integrators from discretization maps and
Dirac structures."""

from .constraints import (
    ImplicitSystem,
    StabilizedSystem,
    multiplier_closed_form_nonholonomic,
    run as run_constraint_algorithm,
)
from .integrators import (
    SolverConfig,
    StepResult,
    Trajectory,
    lagrangian_midpoint_step,
    method1_step,
    method2_step,
    newton_solve,
    rk2_step,
    run_trajectory,
)
from .linear_dirac import (
    LinearDiracStructure,
    PairedVector,
    Subspace,
    SubspaceKind,
    classify,
    from_bivector,
    from_pair,
    from_subspace,
    from_two_form,
    orthogonal_complement,
    pairing,
)
from .maps import (
    CotangentState,
    DiscretizationMap,
    MapDomainError,
    PointPair,
    TangentVector,
    cotangent_lift_generic,
    cotangent_lift_midpoint,
    legendre_interchange,
    lie_group_theta_map,
    projected_map,
    sphere_exp_map,
    sphere_midpoint_map,
    theta_map,
)
from .models import (
    NonholonomicSystem,
    PortHamiltonianSystem,
    RigidBody,
    VortexSystem,
    build_model,
    forced_oscillator,
    nonholonomic_particle,
)

__version__ = "0.1.0"
