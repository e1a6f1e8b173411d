"""
Validation helpers for configurations and numeric comparisons
"""
import logging
import math
from typing import Iterable, List

import numpy as np

from utils.errors import DomainError

logger = logging.getLogger(__name__)


def in_chamber(kind: str, y: np.ndarray, strict: bool = True) -> bool:
    """
    Check that a configuration lies in the ensemble's ordered domain

    Args:
        kind: hermite, laguerre, jacobi-trig or jacobi
        y: Configuration
        strict: Require strict ordering and open boundaries

    Returns:
        True if y lies in the chamber (interior when strict)
    """
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        return False
    gaps = np.diff(y)
    if kind == "jacobi-trig":
        gaps = -gaps
    ordered = bool(np.all(gaps > 0.0)) if strict else bool(np.all(gaps >= 0.0))
    if not ordered:
        return False
    if kind == "hermite":
        return True
    if kind == "laguerre":
        return bool(y[0] > 0.0) if strict else bool(y[0] >= 0.0)
    if kind == "jacobi-trig":
        low, high = 0.0, math.pi / 2.0
    else:
        low, high = -1.0, 1.0
    if strict:
        return bool(np.all((y > low) & (y < high)))
    return bool(np.all((y >= low) & (y <= high)))


def check_chamber(kind: str, y: np.ndarray, strict: bool = True) -> None:
    """Raise DomainError when y is outside the chamber"""
    if not in_chamber(kind, y, strict=strict):
        raise DomainError(f"configuration {np.asarray(y).tolist()} lies outside the {kind} chamber")


def max_relative_gap(reference: np.ndarray, other: np.ndarray) -> float:
    """||reference - other||_max / ||reference||_max"""
    reference = np.asarray(reference, dtype=float)
    scale = float(np.max(np.abs(reference)))
    if scale == 0.0:
        return float(np.max(np.abs(other)))
    return float(np.max(np.abs(reference - np.asarray(other, dtype=float)))) / scale


def parse_int_list(text: str) -> List[int]:
    """
    Parse "50,100,200" or a single integer into a list of positive integers

    Raises:
        DomainError: empty list or non-positive entry
    """
    try:
        values = [int(part) for part in str(text).replace(" ", "").split(",") if part]
    except ValueError as e:
        raise DomainError(f"cannot parse integer list {text!r}: {str(e)}")
    if not values:
        raise DomainError("integer list must not be empty")
    if any(value < 1 for value in values):
        raise DomainError(f"integers must be positive, got {values}")
    return values


def validate_grid(values: Iterable[float], upper: float) -> np.ndarray:
    """Grid values must lie in [0, upper)"""
    grid = np.asarray(list(values), dtype=float)
    if grid.size == 0:
        raise DomainError("grid is empty")
    if np.any(grid < 0.0) or np.any(grid >= upper):
        raise DomainError(f"grid must lie in [0, {upper:.6g}), got [{grid.min():.6g}, {grid.max():.6g}]")
    logger.debug(f"Validated grid of {grid.size} points")
    return grid
