"""Numerics for the generalized radial Gelfand problem L(u) + lambda e^{f(u)} = 0."""

from .errors import *  # noqa: F401,F403
from .operator import (
    OperatorParams,
    Regime,
    classify_regime,
    lambda_star_exact,
    make_khessian,
    make_plaplacian,
    make_raw,
)
from .nonlinearity import (
    AssumptionReport,
    NonlinearitySpec,
    diagnose_assumptions,
    make_nonlinearity,
)
from .regular import (
    RadialTrajectory,
    find_radius,
    first_integral_defect,
    lambda_of_rho,
    pohozaev_residual,
    solve_ivp,
    to_scaled,
)

from .singular import (
    SingularSolution,
    TildeProfile,
    I_fun,
    asymptotic_Z,
    calF,
    exact_singular,
    numeric_singular,
    remainder_order,
    transform_tilde,
)
from .phase import (
    IntersectionReport,
    PhaseOrbit,
    classify_fixed_point,
    count_intersections,
    integrate_orbit,
    orbit_from_solution,
    winding_angle,
)
from .bifurcation import (
    BifurcationCurve,
    convergence_profile,
    detect_oscillation,
    lambda_sharp,
    sweep,
)

__version__ = "0.1.0"
