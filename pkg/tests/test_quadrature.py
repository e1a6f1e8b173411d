import math

import numpy as np
import pytest

from services.quadrature import adaptive_integrate, gauss_kronrod
from utils.errors import DomainError, NumericFailure


def test_kronrod_rule_is_exact_for_low_degree():
    value, error = gauss_kronrod(lambda x: x ** 12, 0.0, 1.0)
    assert value == pytest.approx(1.0 / 13.0, rel=1e-14)
    assert error < 1e-14


def test_error_estimate_is_kronrod_minus_gauss():
    value, error = gauss_kronrod(np.exp, -3.0, 2.0)
    assert value == pytest.approx(math.exp(2.0) - math.exp(-3.0), rel=1e-14)
    assert error >= 0.0


def test_adaptive_smooth_integrand():
    result = adaptive_integrate(np.sin, [0.0, math.pi])
    assert result.value == pytest.approx(2.0, abs=1e-13)
    assert result.error < 1e-11


def test_adaptive_endpoint_singularity():
    result = adaptive_integrate(np.sqrt, [0.0, 1.0], rel_tol=1e-10)
    assert result.value == pytest.approx(2.0 / 3.0, rel=1e-10)
    assert result.panels > 1


def test_breakpoints_split_the_range():
    result = adaptive_integrate(np.abs, [-1.0, 0.0, 2.0])
    assert result.value == pytest.approx(2.5, rel=1e-14)
    assert result.panels == 2


def test_panel_budget_exhaustion_reports_error():
    with pytest.raises(NumericFailure) as excinfo:
        adaptive_integrate(np.sqrt, [0.0, 1.0], max_panels=2)
    assert excinfo.value.diagnostics["panels"] == 2
    assert excinfo.value.diagnostics["error"] > 0.0


def test_non_finite_integrand():
    with pytest.raises(NumericFailure):
        adaptive_integrate(lambda x: np.full_like(x, np.nan), [0.0, 1.0])


@pytest.mark.parametrize("points", [[1.0], [0.0, 0.0], [1.0, 0.0]])
def test_breakpoints_are_validated(points):
    with pytest.raises(DomainError):
        adaptive_integrate(np.sin, points)
