"""Spectral-Galerkin laboratory for third-order-in-time nonlinear acoustics.

The package solves the third-order JMGT model, its linearization with a
prescribed coefficient, and the second-order Westervelt limit on an interval
with Neumann and absorbing boundary conditions, and audits the energy
estimates, fixed-point contraction, and the vanishing-relaxation-time limit.
"""

from .assembly import (
    CoefficientField,
    HarmonicLift,
    SystemMatrices,
    TimeVaryingMass,
    assemble_boundary,
    assemble_load,
    assemble_mass,
    assemble_stiffness,
    assemble_system,
    constant_field,
    field_from_trajectory,
    harmonic_extension,
    lift_forcing,
)
from .basis import (
    End,
    QuadratureRule,
    Space,
    SpectralBasis,
    build_basis,
    build_quadrature,
    eval_mode,
    mode_matrix,
    norms,
    project,
    trace,
    trace_vector,
)
from .energy import (
    AuditMode,
    AuditReport,
    BoundaryFlux,
    DataNorms,
    EnergyRecord,
    audit_estimate,
    boundary_flux,
    data_norms,
    energy_higher,
    energy_lower,
    ode_residual_z,
)
from .exceptions import (
    CompatibilityError,
    ConfigFileError,
    InconsistentEnergyError,
    JmgtLabError,
    NonDegeneracyViolated,
    PicardDivergenceError,
    SingularStepMatrixError,
    SolverFailure,
    UnsupportedOrderError,
)
from .integrate import (
    Trajectory,
    recover_third,
    solve_smgt_linear,
    solve_westervelt_linearized,
    zero_trajectory,
)
from .model import (
    MAX_SIGNAL_ORDER,
    BoundaryKind,
    ModelParams,
    SolverConfig,
    WindowedSignal,
    derived_b,
    signal_eval,
    validate_compatibility,
)
from .nonlinear import (
    NonlinearVariant,
    PicardReport,
    clamp_h,
    degeneracy_check,
    solve_jmgt,
    solve_westervelt_nonlinear,
    trajectory_distance,
    triple_norm,
)

__version__ = "0.1.0"
