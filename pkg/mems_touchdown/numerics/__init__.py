from .asymptotics import (
    ExpansionCoeffsB,
    ExpansionCoeffsL,
    composite_bilaplacian,
    composite_laplacian,
    contact_point_bilaplacian,
    contact_point_laplacian,
    norm_sq_bilaplacian,
    norm_sq_laplacian,
    polynomial_moments,
)
from .discretization import (
    Field,
    Grid,
    LinearOperator,
    build_biharmonic,
    build_laplacian,
    build_operator,
    default_grid_size,
    norm_sq,
)
from .equilibrium import (
    Branch,
    BranchPoint,
    ContinuationConfig,
    FoldSet,
    Stability,
    find_eps_c,
    find_folds,
    fold_scaling,
    fold_scaling_fit,
    folds_at,
    has_two_folds,
    locate_contact_point,
    solve_at_lambda,
    solve_at_norm,
    stability_hint,
    trace_branch,
    upper_branch_point,
)
from .evolution import (
    EvolveConfig,
    Scheme,
    Trajectory,
    adaptive_step,
    comparison_bounds,
    comparison_series,
    comparison_tolerance,
    detect_fronts,
    evolve,
    lower_bound,
    step,
    stepped_comparison_series,
)
from .farfield import FarFieldCoeffs, FarFieldTerm, farfield_series
from .inner import (
    InnerProfile,
    first_integral_residual,
    inner_bilaplacian_shoot,
    inner_laplacian,
)
from .model import energy, force, force_derivative, potential_phi
from .phaseplane import (
    LengthCurve,
    critical_alpha,
    divergence_bounds,
    fold_points_from_curve,
    gap_for_lambda,
    l0,
    l_eps,
    l_eps_ode,
    lambda_c,
    lambda_c1_expansion,
    length_curve,
    switching_window,
    trajectory_norm_sq,
)
from .utils import (
    TRACE,
    BracketFailure,
    ConvergenceFailure,
    GapClosedError,
    ModelParams,
    NoConvergence,
    NumericalFailure,
    Order,
    StepFailure,
    ValidationError,
)

__all__ = [
    'TRACE',
    'BracketFailure',
    'Branch',
    'BranchPoint',
    'ContinuationConfig',
    'ConvergenceFailure',
    'EvolveConfig',
    'ExpansionCoeffsB',
    'ExpansionCoeffsL',
    'FarFieldCoeffs',
    'FarFieldTerm',
    'Field',
    'FoldSet',
    'GapClosedError',
    'Grid',
    'InnerProfile',
    'LengthCurve',
    'LinearOperator',
    'ModelParams',
    'NoConvergence',
    'NumericalFailure',
    'Order',
    'Scheme',
    'Stability',
    'StepFailure',
    'Trajectory',
    'ValidationError',
    'adaptive_step',
    'build_biharmonic',
    'build_laplacian',
    'build_operator',
    'comparison_bounds',
    'comparison_series',
    'comparison_tolerance',
    'composite_bilaplacian',
    'composite_laplacian',
    'contact_point_bilaplacian',
    'contact_point_laplacian',
    'critical_alpha',
    'default_grid_size',
    'detect_fronts',
    'divergence_bounds',
    'energy',
    'evolve',
    'farfield_series',
    'find_eps_c',
    'find_folds',
    'first_integral_residual',
    'fold_points_from_curve',
    'fold_scaling',
    'fold_scaling_fit',
    'folds_at',
    'force',
    'force_derivative',
    'gap_for_lambda',
    'has_two_folds',
    'inner_bilaplacian_shoot',
    'inner_laplacian',
    'l0',
    'l_eps',
    'l_eps_ode',
    'lambda_c',
    'lambda_c1_expansion',
    'length_curve',
    'locate_contact_point',
    'lower_bound',
    'norm_sq',
    'norm_sq_bilaplacian',
    'norm_sq_laplacian',
    'polynomial_moments',
    'potential_phi',
    'solve_at_lambda',
    'solve_at_norm',
    'stability_hint',
    'step',
    'stepped_comparison_series',
    'switching_window',
    'trace_branch',
    'trajectory_norm_sq',
    'upper_branch_point',
]
