"""Time-sectional curvature diagnostics for slow invariant manifolds.

Slow-fast ODE systems relax onto low-dimensional slow invariant manifolds.
Lifting initial slow states through a function a and transporting them with
the flow sweeps out a graph manifold in phase-space-time; the sectional
curvatures of its time-direction planes all vanish exactly when a is the
slow manifold graph.  This package evaluates those curvatures (and the
scalar criteria studied as candidate sufficient conditions) for a registry
of benchmark systems, analytically where closed forms exist and through
shooting-based boundary value solves otherwise.
"""

__version__ = "0.1.0"

from .backend import USE_NUMBA, backend_name
from .bvp import BvpConfig, BvpProblem, BvpSolution, solve_bvp
from .criteria import (
    CriterionSpec,
    criteria_sweep,
    eval_criterion,
    minimize_criterion,
    sufficient_characterization_check,
)
from .errors import (
    GeometryError,
    IntegrationError,
    NodeEvaluationError,
    ShootingError,
    SimcurvError,
)
from .geometry import (
    CurvatureField,
    CurvatureReport,
    MetricTensor,
    curvature_at,
    curvature_field,
    curvature_integral,
    gauss_equation_curvatures,
    gaussian_curvature_11,
    metric_tensor,
)
from .graphp import GraphEval, eval_graph, immersion_jacobian, invariant_graph_eval
from .grids import GridSpec
from .ode import IntegratorConfig, Trajectory, integrate
from .systems import (
    MODEL_NAMES,
    AnalyticArtifacts,
    InitialValueFunction,
    SlowFastSystem,
    artifacts,
    asymptotic_coefficients,
    asymptotic_initial_value,
    constant_initial_value,
    critical_graph,
    initial_value_from_exprs,
    invariance_residual,
    invariant_family,
    make_system,
    rhs,
    rhs_jacobian,
    sim_graph,
)
