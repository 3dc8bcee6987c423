"""Pairwise argument scoring and supervised topic modeling."""

from ._core import (
    NumericalError,
    SunModel,
    ValidationError,
    derive_seed,
    fit,
    fit_bt,
    infer,
    mse,
    predict,
)

__all__ = [
    "NumericalError",
    "SunModel",
    "ValidationError",
    "derive_seed",
    "fit",
    "fit_bt",
    "infer",
    "mse",
    "predict",
]
