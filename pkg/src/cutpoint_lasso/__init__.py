"""Data-driven cut-points for continuous predictors in Cox models."""

__version__ = "0.3.0"

__all__ = [
    "binarize",
    "config_manager",
    "cox_core",
    "data_model",
    "errors",
    "main",
    "metrics",
    "pipelines",
    "simgen",
    "solver",
    "unilasso",
]
