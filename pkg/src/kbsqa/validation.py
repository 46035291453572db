"""Input validation helpers for the estimator surface."""

from __future__ import annotations

from typing import Any

from .errors import NotFittedError


def check_is_fitted(estimator: Any, *attributes: str) -> None:
    """Raise NotFittedError unless every fitted attribute is present."""
    missing = [a for a in attributes if not hasattr(estimator, a)]
    if missing:
        raise NotFittedError(
            f"{type(estimator).__name__} is not fitted yet; call fit() before "
            f"using this method (missing: {', '.join(missing)})"
        )


def check_in_range(name: str, value: float, low: float, high: float) -> None:
    if not low <= value <= high:
        raise ValueError(f"{name} must be in [{low}, {high}], got {value}")


def check_positive_int(name: str, value: int, minimum: int = 1) -> None:
    if not isinstance(value, int) or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
