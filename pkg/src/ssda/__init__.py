"""Sparse semiparametric discriminant analysis.

Monotone marginal transforms estimated from Winsorized empirical CDFs, a
lasso-penalized least-squares discriminant direction with a plug-in intercept,
and a simulation harness for the Gaussian-copula benchmark models.
"""

from .data import Dataset, code_binary
from .dsda import (
    CvResult,
    DsdaFit,
    Tuning,
    cv_tune,
    fit_dsda,
    fit_ssda,
    intercept,
    kkt_residual,
    lambda_grid,
    lambda_max,
    lasso_path,
    predict,
)
from .errors import (
    ConvergenceError,
    CsvParseError,
    DegenerateProjectionError,
    DimensionMismatchError,
    DomainError,
    FoldConstructionError,
    InsufficientClassDataError,
    LegacyDegenerateError,
    ModelFormatError,
    SSDAError,
)
from .evaluation import (
    METHODS,
    BenchmarkReport,
    aggregate,
    consistency_ladder,
    median_bootstrap_se,
    run_benchmark,
    selection_counts,
    test_error,
    transform_sup_error,
)
from .normal import inv_norm_cdf, norm_cdf, norm_pdf
from .simulate import (
    SimulationSpec,
    bayes_error,
    bayes_error_mc,
    make_spec,
    oracle_transform,
    sample_model,
)
from .transforms import (
    TransformModel,
    apply_transform,
    fit_ecdf,
    fit_legacy,
    fit_multiclass_pooled,
    fit_naive,
    fit_pooled,
    fit_transform,
)

__version__ = "0.1.0"
