"""Pliable lasso and tree-guided multi-response pliable lasso."""

from ._core import (
    CoefficientSet,
    ConvergenceReport,
    CvResult,
    DimensionError,
    Hyperparameters,
    MetricReport,
    ParseError,
    PathPoint,
    PathResult,
    PathSpec,
    ValidationError,
    cluster_responses,
    cv,
    evaluate,
    fit,
    fit_path,
    group_soft_threshold,
    lambda_max,
    objective,
    predict,
    simulate,
    soft_threshold,
)

__all__ = [
    "CoefficientSet",
    "ConvergenceReport",
    "CvResult",
    "DimensionError",
    "Hyperparameters",
    "MetricReport",
    "ParseError",
    "PathPoint",
    "PathResult",
    "PathSpec",
    "ValidationError",
    "cluster_responses",
    "cv",
    "evaluate",
    "fit",
    "fit_path",
    "group_soft_threshold",
    "hyperparameters",
    "lambda_max",
    "objective",
    "path_spec",
    "predict",
    "simulate",
    "soft_threshold",
]


def hyperparameters(**fields):
    """Hyperparameters with the given fields set."""
    hp = Hyperparameters()
    for name, value in fields.items():
        if not hasattr(hp, name):
            raise TypeError(f"unknown hyperparameter {name!r}")
        setattr(hp, name, value)
    return hp


def path_spec(base=None, **fields):
    """PathSpec with the given fields set; `base` is a Hyperparameters or a dict."""
    spec = PathSpec()
    if base is not None:
        spec.base = base if isinstance(base, Hyperparameters) else hyperparameters(**base)
    for name, value in fields.items():
        if not hasattr(spec, name):
            raise TypeError(f"unknown path setting {name!r}")
        setattr(spec, name, value)
    return spec
