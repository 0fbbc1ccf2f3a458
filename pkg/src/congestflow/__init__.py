"""Numerical laboratory for congestion-constrained chemotaxis.

Gradient-flow (JKO) time stepping of a density with a hard cap rho <= 1,
coupled to a self-generated chemical field through a screened Poisson
equation with Robin walls, plus the sharp-interface diagnostics (Gamma-limit
energies, first-variation identities, surface tension, contact angles) that
connect the model to Hele-Shaw flow with surface tension.
"""

from .chem import ChemParams, ghost_coefficient, phi_energy_bound_check, solve_phi
from .config import RunConfig, parse_config, render_config
from .energy import (
    EnergyBreakdown,
    EnergyParams,
    boundary_weight,
    energy_terms,
    entropy_integral,
    f_eps,
    j0_limit,
    j_eps_direct,
    j_eps_phase,
    j_eps_symmetric,
    perimeter_estimate_via_phi,
)
from .errors import (
    CongestflowError,
    ConfigError,
    DomainError,
    ParameterError,
    SolverError,
    StepError,
)
from .grid import (
    GridSpec,
    RobinSpec,
    ScalarField,
    VectorField,
    divergence,
    gradient,
    integrate,
)
from .jko import (
    JKOParams,
    JKOState,
    jko_step,
    modified_pressure,
    recover_pressure,
    run_flow,
)
from .analysis import (
    Contact,
    CurveComponent,
    InterfaceCurve,
    TestVectorField,
    contact_angle,
    extract_interface,
    first_variation_lhs,
    first_variation_limit_rhs,
    firstvar_identity_check,
    geometry_metrics,
    interface_perimeter,
    surface_tension_check,
    wall_contact_length,
)
from .sinkhorn import TransportPlan, barycentric_map, entropic_w2
from .runner import replay_check, simulate, write_run
from .presets import PRESET_NAMES, run_preset

__version__ = "0.1.0"
