"""
Frozen-ensemble covariance: inverse covariance S_N from the zeros, the
analytic spectrum, Sigma_N from the dual basis and the Hermite
Dumitriu-Edelman formula.
"""
import logging
import math
from typing import Optional, Sequence, Tuple

import numpy as np

from config.config import settings
from models.models import EnsembleSpec, FreezingCovariance, PolynomialFamily, SpectrumReport, ZeroSet
from services.dualbasis import build_dual_basis, eigenvector_matrix
from services.orthopoly import evaluate_recurrence, recurrence_coefficients, zeros_and_weights
from utils.errors import DomainError, NumericFailure, ToleranceExceeded
from utils.validators import check_chamber, max_relative_gap

logger = logging.getLogger(__name__)


def _zeros_for(spec: EnsembleSpec, zeroset: Optional[ZeroSet]) -> ZeroSet:
    if zeroset is None:
        return zeros_and_weights(spec.family, spec.n)
    if zeroset.family != spec.family or zeroset.n != spec.n:
        raise DomainError(f"zero set {zeroset.family.label()} N={zeroset.n} does not match {spec.kind} N={spec.n}")
    return zeroset


def _pairwise_inverse_square(x: np.ndarray) -> np.ndarray:
    """(x_i - x_j)^-2 off the diagonal, 0 on it"""
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, np.inf)
    if np.any(diff == 0.0):
        raise NumericFailure("coincident zeros in inverse covariance assembly")
    return 1.0 / diff ** 2


def conjugation_matrix(zeros: np.ndarray) -> np.ndarray:
    """Diagonal of D = diag(-2 sqrt(1 - z_i^2)) linking plain and trigonometric Jacobi"""
    return -2.0 * np.sqrt(1.0 - zeros ** 2)


def build_inverse_covariance(spec: EnsembleSpec, zeroset: Optional[ZeroSet] = None) -> np.ndarray:
    """
    Inverse covariance S_N of the frozen fluctuations

    Args:
        spec: Ensemble and parameters
        zeroset: Zeros of the matching family; computed when omitted

    Returns:
        Symmetric N x N matrix
    """
    z = _zeros_for(spec, zeroset).zeros

    if spec.kind == "hermite":
        inv_sq = _pairwise_inverse_square(z)
        s_matrix = -inv_sq
        np.fill_diagonal(s_matrix, 1.0 + inv_sq.sum(axis=1))
        return s_matrix

    if spec.kind == "laguerre":
        r = np.sqrt(z)
        minus = _pairwise_inverse_square(r)
        plus = 1.0 / (r[:, None] + r[None, :]) ** 2
        np.fill_diagonal(plus, 0.0)
        s_matrix = plus - minus
        np.fill_diagonal(s_matrix, 1.0 + spec.nu / r ** 2 + minus.sum(axis=1) + plus.sum(axis=1))
        return s_matrix

    a, b = spec.a, spec.b
    inv_sq = _pairwise_inverse_square(z)
    if spec.kind == "jacobi-trig":
        root = np.sqrt(1.0 - z ** 2)
        s_matrix = -4.0 * np.outer(root, root) * inv_sq
        diagonal = (
            4.0 * (1.0 - z ** 2) * inv_sq.sum(axis=1)
            + 2.0 * (a + b) * (1.0 + z) / (1.0 - z)
            + 2.0 * b * (1.0 - z) / (1.0 + z)
        )
        np.fill_diagonal(s_matrix, diagonal)
        return s_matrix

    s_matrix = -inv_sq
    diagonal = inv_sq.sum(axis=1) + 0.5 * (a + b) / (1.0 - z) ** 2 + 0.5 * b / (1.0 + z) ** 2
    np.fill_diagonal(s_matrix, diagonal)
    return s_matrix


def analytic_eigenvalues(spec: EnsembleSpec) -> np.ndarray:
    """lambda_1..lambda_N; plain Jacobi reports the trigonometric spectrum"""
    j = np.arange(1, spec.n + 1, dtype=float)
    if spec.kind == "hermite":
        return j
    if spec.kind == "laguerre":
        return 2.0 * j
    family = spec.family
    return 2.0 * j * (2 * spec.n + family.alpha + family.beta + 1.0 - j)


def frozen_positions(spec: EnsembleSpec, zeros: np.ndarray) -> np.ndarray:
    """Unit-scale frozen positions: z (Hermite, plain Jacobi), sqrt(z) (Laguerre), arccos(z)/2 (trig Jacobi)"""
    if spec.kind == "laguerre":
        return np.sqrt(zeros)
    if spec.kind == "jacobi-trig":
        return 0.5 * np.arccos(zeros)
    return np.array(zeros, dtype=float)


def frozen_offset_scale(spec: EnsembleSpec, beta_like: float) -> float:
    """Multiplier of the frozen positions in the limit statements: sqrt(2k), sqrt(2 kappa) or 1"""
    if beta_like <= 0.0:
        raise DomainError(f"beta_like must be positive, got {beta_like}")
    if spec.kind in ("hermite", "laguerre"):
        return math.sqrt(2.0 * beta_like)
    return 1.0


def _trig_spec(spec: EnsembleSpec) -> EnsembleSpec:
    return spec.model_copy(update={"kind": "jacobi-trig"})


def build_freezing_covariance(spec: EnsembleSpec, zeroset: Optional[ZeroSet] = None) -> FreezingCovariance:
    """
    Assemble S_N, Sigma_N = T_N diag(1/lambda) T_N^T, lambda and T_N

    For plain Jacobi, T_N and lambda belong to the conjugated trigonometric
    matrix D S D and Sigma_N = D Sigma~_N D.
    """
    zeroset = _zeros_for(spec, zeroset)
    dual = build_dual_basis(zeroset)
    t_matrix = eigenvector_matrix(dual, zeroset)
    eigenvalues = analytic_eigenvalues(spec)
    sigma = (t_matrix / eigenvalues[None, :]) @ t_matrix.T
    if spec.kind == "jacobi":
        d = conjugation_matrix(zeroset.zeros)
        sigma = d[:, None] * sigma * d[None, :]
    sigma = 0.5 * (sigma + sigma.T)
    s_matrix = build_inverse_covariance(spec, zeroset)

    logger.info(f"Built frozen covariance for {spec.kind} N={spec.n}")
    return FreezingCovariance(
        spec=spec,
        s_matrix=s_matrix,
        sigma_matrix=sigma,
        eigenvalues=eigenvalues,
        t_matrix=t_matrix,
        frozen_positions=frozen_positions(spec, zeroset.zeros),
    )


def inverse_residual(fc: FreezingCovariance) -> float:
    """||Sigma_N S_N - I||_max"""
    return float(np.max(np.abs(fc.sigma_matrix @ fc.s_matrix - np.eye(fc.spec.n))))


def spectral_matrix(fc: FreezingCovariance) -> np.ndarray:
    """The matrix whose spectrum is analytic: S_N, or D S_N D for plain Jacobi"""
    if fc.spec.kind != "jacobi":
        return np.asarray(fc.s_matrix)
    d = conjugation_matrix(_zeros_from_positions(fc))
    return d[:, None] * fc.s_matrix * d[None, :]


def _zeros_from_positions(fc: FreezingCovariance) -> np.ndarray:
    positions = fc.frozen_positions
    if fc.spec.kind == "laguerre":
        return positions ** 2
    if fc.spec.kind == "jacobi-trig":
        return np.cos(2.0 * positions)
    return np.asarray(positions)


def spectrum_check(fc: FreezingCovariance) -> SpectrumReport:
    """Compare the analytic spectrum and dual eigenvectors with a dense symmetric eigensolve"""
    matrix = spectral_matrix(fc)
    dense = np.linalg.eigvalsh(matrix)
    analytic = np.sort(fc.eigenvalues)
    eigenvalue_error = float(np.max(np.abs(dense - analytic) / analytic))
    residual = matrix @ fc.t_matrix - fc.t_matrix * fc.eigenvalues[None, :]
    report = SpectrumReport(
        max_eigenvalue_error=eigenvalue_error,
        max_eigvec_residual=float(np.max(np.abs(residual)) / np.max(analytic)),
        inverse_residual=inverse_residual(fc),
        analytic_eigenvalues=analytic,
        dense_eigenvalues=dense,
    )
    logger.debug(
        f"Spectrum check {fc.spec.kind} N={fc.spec.n}: eigenvalue error {eigenvalue_error:.2e}, "
        f"residual {report.max_eigvec_residual:.2e}"
    )
    return report


def _scaled_forward_table(family: PolynomialFamily, zeros: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    n = len(zeros)
    table = evaluate_recurrence(recurrence_coefficients(family, n), n - 1, zeros)
    return table.log_abs(), table.sign()


def covariance_dual(fc: FreezingCovariance, zeroset: Optional[ZeroSet] = None) -> np.ndarray:
    """
    Sigma_N by the dual-polynomial sum over P~_k(z_i) P~_k(z_j) / lambda_{N-k}

    Both normalizations are evaluated: division by P~_{N-1}(z_i) P~_{N-1}(z_j)
    with the sqrt(pi pi)/kappa prefactor, and the (-1)^{i+j} form normalized
    by the row sums of P~_k^2. Plain Jacobi applies 4 sqrt(1-z_i^2) sqrt(1-z_j^2).

    Raises:
        NumericFailure: the two forms disagree beyond tol_identity
    """
    spec = fc.spec
    zeroset = _zeros_for(spec, zeroset)
    family, n, zeros = spec.family, spec.n, zeroset.zeros
    dual = build_dual_basis(zeroset)
    log_abs, signs = _scaled_forward_table(family, zeros)
    inverse_lambda = 1.0 / fc.eigenvalues[::-1]

    with np.errstate(under="ignore"):
        ratio = (signs * signs[n - 1][None, :]) * np.exp(log_abs - log_abs[n - 1][None, :])
        first = (ratio.T * inverse_lambda[None, :]) @ ratio
        prefactor = np.sqrt(dual.pi_at_zeros / dual.kappa)
        first = prefactor[:, None] * first * prefactor[None, :]

        log_sum = np.logaddexp.reduce(2.0 * log_abs, axis=0)
        normalized = signs * np.exp(log_abs - 0.5 * log_sum[None, :])
        second = (normalized.T * inverse_lambda[None, :]) @ normalized
        parity = (-1.0) ** np.arange(1, n + 1)
        second = parity[:, None] * second * parity[None, :]

    if spec.kind == "jacobi":
        root = np.sqrt(1.0 - zeros ** 2)
        weight = 4.0 * np.outer(root, root)
        first = weight * first
        second = weight * second

    gap = max_relative_gap(first, second)
    if gap > settings.tol_identity:
        raise NumericFailure(
            f"dual covariance forms disagree by {gap:.2e}",
            diagnostics={"kind": spec.kind, "n": n, "gap": gap},
        )
    logger.debug(f"Dual covariance forms agree to {gap:.2e} for {spec.kind} N={n}")
    return 0.5 * (second + second.T)


def covariance_de_hermite(n: int) -> np.ndarray:
    """
    Hermite covariance by the Dumitriu-Edelman sum

    sigma_ij = [sum_l H~_l^2(z_i) H~_l^2(z_j) + sum_l H~_{l+1}H~_l(z_i) H~_{l+1}H~_l(z_j)]
               / [sum_l H~_l^2(z_i) sum_l H~_l^2(z_j)]
    """
    family = PolynomialFamily.hermite()
    zeroset = zeros_and_weights(family, n)
    log_abs, signs = _scaled_forward_table(family, zeroset.zeros)
    log_sum = np.logaddexp.reduce(2.0 * log_abs, axis=0)
    with np.errstate(under="ignore"):
        squares = np.exp(2.0 * log_abs - log_sum[None, :])
        products = (signs[1:] * signs[:-1]) * np.exp(log_abs[1:] + log_abs[:-1] - log_sum[None, :])
    sigma = squares.T @ squares + products.T @ products
    return 0.5 * (sigma + sigma.T)


def limit_mean(spec: EnsembleSpec, start: Optional[Sequence[float]] = None, t: float = 1.0) -> np.ndarray:
    """
    Mean of the Gaussian limit: xbar / sqrt(t) * (1,...,1) for Hermite, zero otherwise

    Raises:
        DomainError: t not positive or start outside the ensemble's chamber
    """
    if t <= 0.0:
        raise DomainError(f"t must be positive, got {t}")
    if start is None:
        return np.zeros(spec.n)
    start_array = np.asarray(start, dtype=float)
    if start_array.shape != (spec.n,):
        raise DomainError(f"start must have {spec.n} coordinates, got shape {start_array.shape}")
    check_chamber(spec.kind, start_array, strict=False)
    if spec.kind != "hermite":
        return np.zeros(spec.n)
    return np.full(spec.n, start_array.mean() / math.sqrt(t))


def require_inverse_consistency(fc: FreezingCovariance, tolerance: Optional[float] = None) -> float:
    """Raise ToleranceExceeded when ||Sigma S - I||_max is above tolerance"""
    tolerance = settings.tol_inverse if tolerance is None else tolerance
    residual = inverse_residual(fc)
    if residual > tolerance:
        raise ToleranceExceeded("inverse residual", residual, tolerance)
    return residual
