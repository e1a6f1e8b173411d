"""
Adaptive Gauss-Kronrod (G7/K15) quadrature on finite panels
"""
import heapq
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from config.config import settings
from utils.errors import DomainError, NumericFailure

logger = logging.getLogger(__name__)

Integrand = Callable[[np.ndarray], np.ndarray]

# Kronrod abscissae on [0, 1]; the Gauss points are xgk[1], xgk[3], xgk[5], xgk[7]
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate((-_XGK[:-1], _XGK[::-1]))
_KRONROD_WEIGHTS = np.concatenate((_WGK[:-1], _WGK[::-1]))
_GAUSS_WEIGHTS = np.zeros(15)
_GAUSS_WEIGHTS[[1, 3, 5]] = _WG[:3]
_GAUSS_WEIGHTS[7] = _WG[3]
_GAUSS_WEIGHTS[[13, 11, 9]] = _WG[:3]


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error: float
    panels: int


def gauss_kronrod(f: Integrand, a: float, b: float) -> Tuple[float, float]:
    """
    K15 value on [a, b] and the error estimate |K15 - G7|

    f is called once with the 15 nodes as an array.
    """
    center = 0.5 * (a + b)
    half = 0.5 * (b - a)
    values = np.asarray(f(center + half * _NODES), dtype=float)
    if not np.all(np.isfinite(values)):
        raise NumericFailure(f"integrand not finite on [{a:.6g}, {b:.6g}]", diagnostics={"a": a, "b": b})
    kronrod = half * float(np.dot(_KRONROD_WEIGHTS, values))
    gauss = half * float(np.dot(_GAUSS_WEIGHTS, values))
    return kronrod, abs(kronrod - gauss)


def adaptive_integrate(
    f: Integrand,
    breakpoints: Sequence[float],
    abs_tol: Optional[float] = None,
    rel_tol: Optional[float] = None,
    max_panels: Optional[int] = None,
) -> QuadratureResult:
    """
    Globally adaptive integration over consecutive breakpoints

    The panel with the largest error estimate is bisected until the summed
    estimate is below max(abs_tol, rel_tol * |value|).

    Raises:
        DomainError: fewer than two or non-increasing breakpoints
        NumericFailure: panel budget exhausted; diagnostics carry the achieved error
    """
    abs_tol = settings.quad_abs_tol if abs_tol is None else abs_tol
    rel_tol = settings.quad_rel_tol if rel_tol is None else rel_tol
    max_panels = settings.quad_max_panels if max_panels is None else max_panels

    points = [float(p) for p in breakpoints]
    if len(points) < 2 or any(b <= a for a, b in zip(points, points[1:])):
        raise DomainError(f"breakpoints must be strictly increasing, got {points[:6]}")

    heap = []
    for a, b in zip(points, points[1:]):
        value, error = gauss_kronrod(f, a, b)
        heapq.heappush(heap, (-error, a, b, value))

    while True:
        total = math.fsum(entry[3] for entry in heap)
        total_error = math.fsum(-entry[0] for entry in heap)
        if total_error <= max(abs_tol, rel_tol * abs(total)):
            break
        if len(heap) >= max_panels:
            raise NumericFailure(
                f"quadrature did not converge within {max_panels} panels",
                diagnostics={"value": total, "error": total_error, "panels": len(heap)},
            )
        _, a, b, _ = heapq.heappop(heap)
        middle = 0.5 * (a + b)
        for left, right in ((a, middle), (middle, b)):
            value, error = gauss_kronrod(f, left, right)
            heapq.heappush(heap, (-error, left, right, value))

    logger.debug(f"Quadrature converged: value {total:.15g}, error {total_error:.2e}, {len(heap)} panels")
    return QuadratureResult(value=total, error=total_error, panels=len(heap))
