"""Pool-based active learning: query strategies, experiment harness and labeling service."""

from ._core import (  # noqa: F401
    ActiveLearner,
    ConfigError,
    ConflictError,
    Error,
    NotFoundError,
    SessionManager,
    ValidationError,
    bald_scores,
    compare_strategies,
    config_keys,
    entropy_scores,
    format_curve,
    kcenter_greedy,
    least_confidence_scores,
    make_two_gaussians,
    margin_scores,
    run_experiment,
    softmax,
    strategy_names,
)
