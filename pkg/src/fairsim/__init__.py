"""Simulation lab for bias absorption in online personalized ranking.

A linear ranking model is warm-started on fair feedback and then personalized
online against a user whose labels mix a fixed acceptance rule with outright
group bias. The package measures how much of that bias the model absorbs
(Skew@k, NDCS, Precision@k) and evaluates a covariance-projection regularizer
that suppresses the model component aligned with the protected attribute.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DimensionMismatch,
    EmptyQualifiedPool,
    FairsimError,
    NumericalError,
    SingularSystemError,
)
from .datagen import (
    Categorical,
    DataPoint,
    GenConfig,
    Normal,
    ProxyDist,
    Uniform,
    default_config,
    feature_matrix,
    generate_pool,
    load_pool,
    protected_values,
    save_pool,
)
from .usermodel import (
    DEFAULT_USER_WEIGHTS,
    LabeledPool,
    UserConfig,
    default_user,
    label_pool,
    linear_scores,
    load_labeled,
    save_labeled,
)
from .learner import (
    LinearModel,
    OnlineTrace,
    load_model,
    perceptron_update,
    predict,
    rank_by_model,
    run_online,
    save_model,
    save_trace,
    score,
    score_all,
    warm_start,
    zero_model,
)
from .fairreg import (
    FairRegularizer,
    fit_auxiliary,
    load_regularizer,
    regularized_update,
    save_regularizer,
    solve_exact,
)
from .metrics import (
    EPSILON_FLOOR,
    Baseline,
    MetricsReport,
    compute_baseline,
    evaluate_ranking,
    load_baseline,
    ndcs,
    precision_at_k,
    report_rows,
    save_baseline,
    skew_at_k,
)
from .experiments import (
    ExperimentConfig,
    RunResult,
    build_seed_context,
    derive_seed,
    experiment_config_from_dict,
    run_evolution,
    run_final_eval,
    run_reg_sweep,
    write_results,
)

__all__ = [
    "__version__",
    "FairsimError",
    "ConfigError",
    "DimensionMismatch",
    "NumericalError",
    "SingularSystemError",
    "EmptyQualifiedPool",
    "Uniform",
    "Normal",
    "Categorical",
    "ProxyDist",
    "GenConfig",
    "DataPoint",
    "default_config",
    "generate_pool",
    "feature_matrix",
    "protected_values",
    "save_pool",
    "load_pool",
    "DEFAULT_USER_WEIGHTS",
    "UserConfig",
    "LabeledPool",
    "default_user",
    "label_pool",
    "linear_scores",
    "save_labeled",
    "load_labeled",
    "LinearModel",
    "OnlineTrace",
    "zero_model",
    "score",
    "score_all",
    "predict",
    "rank_by_model",
    "perceptron_update",
    "warm_start",
    "run_online",
    "save_model",
    "load_model",
    "save_trace",
    "FairRegularizer",
    "fit_auxiliary",
    "solve_exact",
    "regularized_update",
    "save_regularizer",
    "load_regularizer",
    "EPSILON_FLOOR",
    "Baseline",
    "MetricsReport",
    "compute_baseline",
    "skew_at_k",
    "ndcs",
    "precision_at_k",
    "evaluate_ranking",
    "report_rows",
    "save_baseline",
    "load_baseline",
    "ExperimentConfig",
    "RunResult",
    "derive_seed",
    "experiment_config_from_dict",
    "build_seed_context",
    "run_final_eval",
    "run_evolution",
    "run_reg_sweep",
    "write_results",
]
