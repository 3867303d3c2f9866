"""Chest X-ray pneumonia classifier (Python bindings)."""

from ._core import (
    ConfigError,
    DecodeError,
    Error,
    FormatError,
    InputError,
    LayoutError,
    Model,
    NumericError,
    ShapeError,
    StateError,
    __version__,
    average_precision,
    confusion_at_threshold,
    conv2d_forward,
    preprocess,
    pr_curve,
    roc_curve,
    run_cli,
)

__all__ = [
    "ConfigError",
    "DecodeError",
    "Error",
    "FormatError",
    "InputError",
    "LayoutError",
    "Model",
    "NumericError",
    "ShapeError",
    "StateError",
    "__version__",
    "average_precision",
    "confusion_at_threshold",
    "conv2d_forward",
    "preprocess",
    "pr_curve",
    "roc_curve",
    "run_cli",
]
