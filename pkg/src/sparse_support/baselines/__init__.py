from .estimators import AmpDetector, GroupLassoDetector, LassoDetector, SparseGroupLassoDetector
from .selection import (
    LambdaSelection,
    MagnitudeThreshold,
    apply_magnitude_threshold,
    calibrate_magnitude_threshold,
    lambda_grid,
    lambda_scale,
    select_lambda,
    support_extract,
)
from .solvers import (
    AmpConfig,
    GroupSpec,
    LassoConfig,
    SolverResult,
    amp_solve,
    csoft,
    group_lasso_solve,
    group_shrink,
    lasso_solve,
    sgl_objective,
    sparse_group_lasso_solve,
)

__all__ = [
    "AmpDetector",
    "GroupLassoDetector",
    "LassoDetector",
    "SparseGroupLassoDetector",
    "LambdaSelection",
    "MagnitudeThreshold",
    "apply_magnitude_threshold",
    "calibrate_magnitude_threshold",
    "lambda_grid",
    "lambda_scale",
    "select_lambda",
    "support_extract",
    "AmpConfig",
    "GroupSpec",
    "LassoConfig",
    "SolverResult",
    "amp_solve",
    "csoft",
    "group_lasso_solve",
    "group_shrink",
    "lasso_solve",
    "sgl_objective",
    "sparse_group_lasso_solve",
]
