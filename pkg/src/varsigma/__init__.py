"""Error-variance estimation in high-dimensional linear models.

Natural lasso, organic lasso and comparator estimators, with coordinate
descent solvers, duality-gap certificates, tuning-parameter selection and
a seeded simulation harness.
"""

__version__ = "0.1.0"

from .core import (
    Dataset,
    DegenerateDesignError,
    DegenerateFitError,
    FitResult,
    PenaltyKind,
    PenaltySpec,
    StandardizedDesign,
    UndefinedEstimateError,
    VarsigmaError,
    max_abs_correlation,
    objective,
    soft_threshold,
    standardize_columns,
)
from .estimators import (
    Method,
    VarianceEstimate,
    naive_variance,
    natural_variance,
    oracle_variance,
    organic_variance,
    reid_variance,
    sqrt_variance,
)
from .solvers import (
    SolverOptions,
    lambda_max_lasso,
    lambda_max_sqrt,
    lasso_cd,
    lasso_duality_gap,
    organic_cd,
    organic_duality_gap,
    sqrt_lasso,
)
from .tuning import (
    CvResult,
    FixedLambda,
    LambdaGrid,
    PathDirection,
    kfold_cv,
    lambda3_monte_carlo,
    lambda_fixed,
    make_grid,
    path_map,
)

__all__ = [
    "__version__",
    "Dataset",
    "DegenerateDesignError",
    "DegenerateFitError",
    "FitResult",
    "PenaltyKind",
    "PenaltySpec",
    "StandardizedDesign",
    "UndefinedEstimateError",
    "VarsigmaError",
    "max_abs_correlation",
    "objective",
    "soft_threshold",
    "standardize_columns",
    "Method",
    "VarianceEstimate",
    "naive_variance",
    "natural_variance",
    "oracle_variance",
    "organic_variance",
    "reid_variance",
    "sqrt_variance",
    "SolverOptions",
    "lambda_max_lasso",
    "lambda_max_sqrt",
    "lasso_cd",
    "lasso_duality_gap",
    "organic_cd",
    "organic_duality_gap",
    "sqrt_lasso",
    "CvResult",
    "FixedLambda",
    "LambdaGrid",
    "PathDirection",
    "kfold_cv",
    "lambda3_monte_carlo",
    "lambda_fixed",
    "make_grid",
    "path_map",
]
