import numpy as np
import pytest

from models.models import EnsembleSpec, PolynomialFamily
from services.dualbasis import (
    build_dual_basis,
    dual_orthogonality_residual,
    dual_recurrence,
    dual_recurrence_residual,
    eigenvector_matrix,
    eval_dual,
    monic_dual_coefficients,
)
from services.freezecov import build_freezing_covariance, spectral_matrix
from services.orthopoly import recurrence_coefficients, zeros_and_weights
from utils.errors import DomainError

FAMILIES = [
    PolynomialFamily.hermite(),
    PolynomialFamily.laguerre(0.0),
    PolynomialFamily.laguerre(1.5),
    PolynomialFamily.jacobi(1.0, 0.0),
    PolynomialFamily.jacobi(0.5, 2.0),
]


def test_dual_recurrence_reverses_coefficients():
    family = PolynomialFamily.laguerre(0.5)
    forward = recurrence_coefficients(family, 6)
    dual = dual_recurrence(family, 6)
    assert np.array_equal(dual.a, forward.a[::-1])
    assert np.array_equal(dual.b, forward.b[::-1])
    assert np.allclose(monic_dual_coefficients(family, 6), forward.u[::-1])


@pytest.mark.parametrize("family", FAMILIES, ids=lambda f: f.label())
@pytest.mark.parametrize("n", [1, 3, 10, 50])
def test_dual_identities(family, n):
    zs = zeros_and_weights(family, n)
    dual = build_dual_basis(zs)

    assert np.allclose(dual.values[0], 1.0)
    assert dual_recurrence_residual(dual, zs) < 1e-9
    assert dual_orthogonality_residual(dual, zs) < 1e-9

    t_matrix = eigenvector_matrix(dual, zs)
    assert np.allclose(t_matrix.T @ t_matrix, np.eye(n), atol=1e-9)
    assert np.allclose(t_matrix @ t_matrix.T, np.eye(n), atol=1e-9)


def test_direct_dual_evaluation_matches_table():
    family = PolynomialFamily.hermite()
    zs = zeros_and_weights(family, 6)
    dual = build_dual_basis(zs)
    direct = eval_dual(family, 6, 5, zs.zeros)
    assert np.allclose(direct, dual.values, rtol=1e-10, atol=1e-12)


def test_connection_constants_in_classical_sign():
    n = 5
    hermite = build_dual_basis(zeros_and_weights(PolynomialFamily.hermite(), n))
    assert hermite.connection_sign.tolist() == [(-1.0) ** (n - i) for i in range(1, n + 1)]

    laguerre = build_dual_basis(zeros_and_weights(PolynomialFamily.laguerre(0.0), n))
    assert laguerre.connection_sign.tolist() == [(-1.0) ** (i - 1) for i in range(1, n + 1)]


def test_scaled_values_use_kappa():
    zs = zeros_and_weights(PolynomialFamily.hermite(), 4)
    dual = build_dual_basis(zs)
    assert dual.kappa == pytest.approx(4.0)
    assert np.allclose(dual.scaled_values[0], 0.5)


def test_eval_dual_degree_range():
    with pytest.raises(DomainError):
        eval_dual(PolynomialFamily.hermite(), 4, 4, 0.0)


def test_two_point_laguerre_table_by_gram_schmidt():
    zs = zeros_and_weights(PolynomialFamily.laguerre(0.0), 2)
    dual = build_dual_basis(zs)
    z = zs.zeros
    weights = z / dual.kappa
    assert np.allclose(zs.dual_christoffel, weights, rtol=1e-12)
    assert weights.sum() == pytest.approx(1.0, abs=1e-12)

    mean = np.dot(weights, z)
    norm = np.sqrt(np.dot(weights, (z - mean) ** 2))
    assert np.allclose(dual.values[0], 1.0, atol=1e-12)
    assert np.allclose(dual.values[1], (z - mean) / norm, atol=1e-12)


@pytest.mark.parametrize("family", FAMILIES, ids=lambda f: f.label())
def test_dual_zeros_lie_between_the_extreme_zeros(family):
    for n in range(2, 13):
        zs = zeros_and_weights(family, n)
        dual = build_dual_basis(zs)
        coefficients = dual_recurrence(family, n)
        for k in range(1, min(5, n - 1) + 1):
            jacobi_matrix = np.diag(coefficients.a[:k]) + np.diag(coefficients.b[: k - 1], 1) + np.diag(coefficients.b[: k - 1], -1)
            roots = np.linalg.eigvalsh(jacobi_matrix)
            assert np.all(roots > zs.zeros[0]) and np.all(roots < zs.zeros[-1])
            # k roots inside means k sign changes between the ends
            assert np.sign(dual.values[k, -1]) == 1.0
            assert np.sign(dual.values[k, 0]) == (-1.0) ** k


@pytest.mark.parametrize("n", [1, 5, 20, 50])
def test_hermite_duals_are_positive_at_the_top_zero(n):
    zs = zeros_and_weights(PolynomialFamily.hermite(), n)
    assert np.all(build_dual_basis(zs).values[:, -1] > 0.0)


@pytest.mark.parametrize("kind", ["jacobi-trig", "jacobi"])
def test_legendre_columns_match_a_dense_eigensolve(kind):
    spec = EnsembleSpec(kind=kind, n=4, a=0.0, b=1.0)
    assert (spec.family.alpha, spec.family.beta) == (0.0, 0.0)
    zs = zeros_and_weights(spec.family, 4)
    t_matrix = eigenvector_matrix(build_dual_basis(zs), zs)

    fc = build_freezing_covariance(spec)
    dense_values, dense_vectors = np.linalg.eigh(spectral_matrix(fc))
    for j in range(4):
        column = int(np.argmin(np.abs(dense_values - fc.eigenvalues[j])))
        overlap = np.dot(dense_vectors[:, column], t_matrix[:, j])
        assert abs(overlap) == pytest.approx(1.0, abs=1e-10)
        assert np.allclose(np.sign(overlap) * dense_vectors[:, column], t_matrix[:, j], atol=1e-10)
