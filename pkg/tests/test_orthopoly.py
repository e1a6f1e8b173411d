import math

import numpy as np
import pytest
from scipy import special

from models.models import PolynomialFamily
from services.orthopoly import (
    eval_orthonormal,
    eval_orthonormal_derivative,
    hermite_laguerre_symmetry_gap,
    kappa_constant,
    measure_moments,
    orthonormal_table,
    pi_function,
    polynomial_residual,
    recurrence_coefficients,
    zeros_and_weights,
)
from utils.errors import DomainError

FAMILIES = [
    PolynomialFamily.hermite(),
    PolynomialFamily.laguerre(0.0),
    PolynomialFamily.laguerre(1.5),
    PolynomialFamily.jacobi(1.0, 0.0),
    PolynomialFamily.jacobi(0.5, 2.0),
    PolynomialFamily.jacobi(-0.5, -0.5),
]


def test_hermite_degree_two():
    zs = zeros_and_weights(PolynomialFamily.hermite(), 2)
    assert zs.zeros == pytest.approx([-1.0 / math.sqrt(2.0), 1.0 / math.sqrt(2.0)], abs=1e-15)
    assert zs.christoffel == pytest.approx([0.5, 0.5], abs=1e-15)
    assert zs.dual_christoffel == pytest.approx([0.5, 0.5], abs=1e-15)


def test_laguerre_zero_sum_is_trace():
    zs = zeros_and_weights(PolynomialFamily.laguerre(0.0), 3)
    assert zs.zeros.sum() == pytest.approx(9.0, abs=1e-12)


def test_chebyshev_zeros_when_alpha_plus_beta_is_minus_one():
    n = 7
    zs = zeros_and_weights(PolynomialFamily.jacobi(-0.5, -0.5), n)
    expected = np.sort(np.cos((2 * np.arange(1, n + 1) - 1) * np.pi / (2 * n)))
    assert np.allclose(zs.zeros, expected, atol=1e-14)
    assert np.allclose(zs.christoffel, 1.0 / n, atol=1e-14)


@pytest.mark.parametrize("n", [5, 40, 300])
def test_hermite_against_scipy(n):
    nodes, weights = special.roots_hermite(n)
    zs = zeros_and_weights(PolynomialFamily.hermite(), n)
    assert np.allclose(zs.zeros, nodes, rtol=1e-11, atol=1e-12)
    expected_log = np.log(weights / math.sqrt(math.pi))
    assert np.allclose(zs.log_christoffel, expected_log, atol=1e-8)


@pytest.mark.parametrize("alpha", [0.0, 1.5])
def test_laguerre_against_scipy(alpha):
    nodes, weights = special.roots_genlaguerre(20, alpha)
    zs = zeros_and_weights(PolynomialFamily.laguerre(alpha), 20)
    assert np.allclose(zs.zeros, nodes, rtol=1e-12)
    assert np.allclose(zs.christoffel, weights / math.gamma(alpha + 1.0), rtol=1e-9)


def test_jacobi_against_scipy():
    nodes, weights = special.roots_jacobi(15, 0.5, 2.0)
    zs = zeros_and_weights(PolynomialFamily.jacobi(0.5, 2.0), 15)
    assert np.allclose(zs.zeros, nodes, atol=1e-13)
    assert np.allclose(zs.christoffel, weights / weights.sum(), rtol=1e-9)


@pytest.mark.parametrize("family", FAMILIES, ids=lambda f: f.label())
def test_quadrature_orthonormality_and_weights(family):
    n = 12
    zs = zeros_and_weights(family, n)
    values = orthonormal_table(family, n - 1, zs.zeros).values()
    gram = (values * zs.christoffel[None, :]) @ values.T
    assert np.allclose(gram, np.eye(n), atol=1e-10)
    assert np.allclose(zs.christoffel_golub_welsch, zs.christoffel, rtol=1e-9, atol=1e-14)
    assert np.allclose(zs.dual_christoffel, pi_function(family, zs.zeros) / kappa_constant(family, n), rtol=1e-10)
    assert polynomial_residual(zs) < 1e-12


@pytest.mark.parametrize("family", FAMILIES, ids=lambda f: f.label())
def test_gauss_rule_integrates_moments(family):
    n = 6
    zs = zeros_and_weights(family, n)
    moments = measure_moments(family, 2 * n - 1)
    for m in range(2 * n):
        assert np.dot(zs.christoffel, zs.zeros ** m) == pytest.approx(moments[m], rel=1e-10, abs=1e-12)


def test_classical_signs():
    assert eval_orthonormal(PolynomialFamily.hermite(), 1, 0.5) == pytest.approx([1.0, math.sqrt(2.0) * 0.5])
    laguerre = PolynomialFamily.laguerre(0.0)
    assert eval_orthonormal(laguerre, 1, 0.0) == pytest.approx([1.0, 1.0])
    assert eval_orthonormal_derivative(laguerre, 1, 0.3) == pytest.approx(-1.0)


def test_recurrence_shapes():
    coefficients = recurrence_coefficients(PolynomialFamily.jacobi(0.5, 2.0), 6)
    assert coefficients.n == 6
    assert coefficients.b.shape == (5,)
    assert np.all(coefficients.u > 0.0)


def test_large_n_stays_finite():
    zs = zeros_and_weights(PolynomialFamily.hermite(), 400)
    assert np.all(np.isfinite(zs.log_christoffel))
    assert np.all(np.isfinite(zs.dual_christoffel))


def test_hermite_laguerre_symmetry():
    assert hermite_laguerre_symmetry_gap(6) < 1e-12


@pytest.mark.parametrize("n", [0, -3, 10_000])
def test_degree_domain(n):
    with pytest.raises(DomainError):
        zeros_and_weights(PolynomialFamily.hermite(), n)


def test_family_parameters_are_validated():
    with pytest.raises(ValueError):
        PolynomialFamily.laguerre(-1.0)
    with pytest.raises(ValueError):
        PolynomialFamily.jacobi(0.0, -2.0)
