import math

import numpy as np
import pytest

from config.config import settings
from models.models import EnsembleSpec
from services.freezecov import (
    analytic_eigenvalues,
    build_freezing_covariance,
    build_inverse_covariance,
    conjugation_matrix,
    covariance_de_hermite,
    covariance_dual,
    frozen_offset_scale,
    inverse_residual,
    limit_mean,
    require_inverse_consistency,
    spectrum_check,
)
from services.orthopoly import zeros_and_weights
from utils.errors import DomainError, ToleranceExceeded
from utils.validators import max_relative_gap

SPECS = [
    EnsembleSpec(kind="hermite", n=7),
    EnsembleSpec(kind="laguerre", n=7, nu=1.0),
    EnsembleSpec(kind="laguerre", n=7, nu=2.5),
    EnsembleSpec(kind="jacobi-trig", n=7, a=1.0, b=1.0),
    EnsembleSpec(kind="jacobi-trig", n=7, a=0.5, b=2.0),
    EnsembleSpec(kind="jacobi", n=7, a=1.0, b=1.0),
]


def test_hermite_two_particles():
    fc = build_freezing_covariance(EnsembleSpec(kind="hermite", n=2))
    assert np.allclose(fc.s_matrix, [[1.5, -0.5], [-0.5, 1.5]], atol=1e-14)
    assert np.allclose(fc.sigma_matrix, [[0.75, 0.25], [0.25, 0.75]], atol=1e-14)


def test_single_hermite_particle():
    fc = build_freezing_covariance(EnsembleSpec(kind="hermite", n=1))
    assert np.allclose(fc.sigma_matrix, [[1.0]])


@pytest.mark.parametrize("n", [2, 5, 10, 25, 50])
def test_analytic_spectra(n):
    expected = {
        "hermite": np.arange(1, n + 1, dtype=float),
        "laguerre": 2.0 * np.arange(1, n + 1),
    }
    for kind, values in expected.items():
        spec = EnsembleSpec(kind=kind, n=n, nu=2.5)
        assert np.allclose(analytic_eigenvalues(spec), values)
        report = spectrum_check(build_freezing_covariance(spec))
        assert report.max_eigenvalue_error < settings.tol_spectrum
        assert report.max_eigvec_residual <= settings.tol_spectrum

    for a, b in ((1.0, 1.0), (0.5, 2.0)):
        spec = EnsembleSpec(kind="jacobi-trig", n=n, a=a, b=b)
        alpha, beta = spec.family.alpha, spec.family.beta
        k = np.arange(1, n + 1)
        jacobi_values = np.sort(2.0 * k * (2 * n + alpha + beta + 1 - k))
        assert np.allclose(np.sort(analytic_eigenvalues(spec)), jacobi_values)
        report = spectrum_check(build_freezing_covariance(spec))
        assert report.max_eigenvalue_error < settings.tol_spectrum
        assert report.max_eigvec_residual <= settings.tol_spectrum


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: f"{s.kind}-{s.nu}-{s.a}-{s.b}")
def test_inverse_consistency(spec):
    fc = build_freezing_covariance(spec)
    assert inverse_residual(fc) < 1e-8
    assert np.allclose(fc.sigma_matrix, fc.sigma_matrix.T)
    assert np.all(np.linalg.eigvalsh(fc.sigma_matrix) > 0.0)


@pytest.mark.parametrize("kind", ["hermite", "laguerre", "jacobi-trig", "jacobi"])
def test_inverse_consistency_at_fifty(kind):
    fc = build_freezing_covariance(EnsembleSpec(kind=kind, n=50, nu=1.5))
    assert require_inverse_consistency(fc) < 1e-8


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: f"{s.kind}-{s.nu}-{s.a}-{s.b}")
def test_dual_sum_reproduces_sigma(spec):
    fc = build_freezing_covariance(spec)
    assert max_relative_gap(fc.sigma_matrix, covariance_dual(fc)) < 1e-9


@pytest.mark.parametrize("n", range(1, 13))
def test_hermite_formula_cross_validation(n):
    fc = build_freezing_covariance(EnsembleSpec(kind="hermite", n=n))
    assert max_relative_gap(fc.sigma_matrix, covariance_de_hermite(n)) < 1e-8


def test_plain_jacobi_is_conjugated_trig_jacobi():
    plain = build_freezing_covariance(EnsembleSpec(kind="jacobi", n=6, a=0.5, b=2.0))
    trig = build_freezing_covariance(EnsembleSpec(kind="jacobi-trig", n=6, a=0.5, b=2.0))
    d = conjugation_matrix(zeros_and_weights(plain.spec.family, 6).zeros)
    assert np.allclose(plain.sigma_matrix, d[:, None] * trig.sigma_matrix * d[None, :], rtol=1e-10, atol=1e-13)
    assert np.allclose(plain.eigenvalues, trig.eigenvalues)


def test_inverse_covariance_accepts_matching_zeros_only():
    spec = EnsembleSpec(kind="hermite", n=4)
    with pytest.raises(DomainError):
        build_inverse_covariance(spec, zeros_and_weights(spec.family, 5))


def test_frozen_offset_scale():
    assert frozen_offset_scale(EnsembleSpec(kind="hermite", n=2), 8.0) == pytest.approx(4.0)
    assert frozen_offset_scale(EnsembleSpec(kind="jacobi-trig", n=2), 8.0) == 1.0
    with pytest.raises(DomainError):
        frozen_offset_scale(EnsembleSpec(kind="hermite", n=2), 0.0)


def test_limit_mean():
    spec = EnsembleSpec(kind="hermite", n=3)
    assert np.allclose(limit_mean(spec, [1.0, 2.0, 3.0], t=4.0), 1.0)
    assert np.allclose(limit_mean(spec), 0.0)
    assert np.allclose(limit_mean(EnsembleSpec(kind="laguerre", n=3), [0.0, 1.0, 2.0]), 0.0)
    with pytest.raises(DomainError):
        limit_mean(spec, [3.0, 2.0, 1.0])
    with pytest.raises(DomainError):
        limit_mean(spec, [1.0, 2.0, 3.0], t=0.0)


def test_tolerance_exceeded_is_raised():
    fc = build_freezing_covariance(EnsembleSpec(kind="laguerre", n=10, nu=2.5))
    with pytest.raises(ToleranceExceeded) as excinfo:
        require_inverse_consistency(fc, tolerance=-1.0)
    assert excinfo.value.quantity == "inverse residual"


def test_ensemble_parameters_are_validated():
    with pytest.raises(ValueError):
        EnsembleSpec(kind="laguerre", n=3, nu=0.0)
    with pytest.raises(ValueError):
        EnsembleSpec(kind="jacobi-trig", n=3, a=-1.0)
