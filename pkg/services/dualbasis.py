"""
Dual orthogonal polynomials (reversed recurrence coefficients) tabulated at
the zeros of P~_N, connection constants c_i and the eigenvector matrix T_N.
"""
import logging
import math

import numpy as np

from config.config import settings
from models.models import DualBasis, PolynomialFamily, RecurrenceCoefficients, ZeroSet
from services.orthopoly import (
    evaluate_recurrence,
    kappa_constant,
    leading_sign,
    pi_function,
    recurrence_coefficients,
)
from utils.errors import DomainError, NumericFailure

logger = logging.getLogger(__name__)


def dual_recurrence(family: PolynomialFamily, n: int) -> RecurrenceCoefficients:
    """
    Orthonormal dual recurrence of order N

    x Q~_k = b_{N-k-1} Q~_{k+1} + a_{N-k-1} Q~_k + b_{N-k} Q~_{k-1}
    """
    forward = recurrence_coefficients(family, n)
    return RecurrenceCoefficients(a=forward.a[::-1], b=forward.b[::-1])


def monic_dual_coefficients(family: PolynomialFamily, n: int) -> np.ndarray:
    """u_{N-k} for k = 1..N-1, the monic dual off-diagonal coefficients"""
    return dual_recurrence(family, n).u


def eval_dual(family: PolynomialFamily, n: int, k_max: int, x) -> np.ndarray:
    """
    Direct evaluation of Q~_0..Q~_{k_max} by the dual recurrence.

    Forward evaluation is unstable at the extreme zeros once N grows; use the
    DualBasis table for values at the zeros.
    """
    if not 0 <= k_max <= n - 1:
        raise DomainError(f"k_max must lie in 0..{n - 1}, got {k_max}")
    coefficients = dual_recurrence(family, n)
    if k_max == 0:
        return np.ones((1, np.size(x)))
    return evaluate_recurrence(coefficients, k_max, x).values()


def _expected_connection_sign(family: PolynomialFamily, n: int) -> np.ndarray:
    i = np.arange(1, n + 1)
    if family.kind == "laguerre":
        return (-1.0) ** (i - 1)
    return (-1.0) ** (n - i)


def build_dual_basis(zeroset: ZeroSet) -> DualBasis:
    """
    Tabulate the orthonormal dual polynomials at the zeros

    The table is read off the positive-leading forward table through the
    reversal identity P+_j(z_i) = c+_i Q~_{N-1-j}(z_i), not by running the
    reversed recurrence, which is forward-unstable at the extreme zeros. The
    reversal identity therefore holds by construction here;
    dual_recurrence_residual is the independent check that the table solves
    the dual recurrence. The connection constants from P~_{N-1}(z_i) and from
    the signed square-root form are checked against each other.

    Raises:
        NumericFailure: the two connection constant forms disagree
    """
    family, n, zeros = zeroset.family, zeroset.n, zeroset.zeros
    coefficients = recurrence_coefficients(family, n)
    table = evaluate_recurrence(coefficients, n - 1, zeros)
    log_abs = table.log_abs()
    signs = table.sign()

    kappa = kappa_constant(family, n)
    pi_values = pi_function(family, zeros)

    # c_i from P~_{N-1}(z_i)
    log_c = log_abs[n - 1]
    classical_sign = signs[n - 1] * leading_sign(family, n - 1)

    # c_i from sqrt(pi/kappa * sum_j P~_j^2)
    log_sum = np.logaddexp.reduce(2.0 * log_abs, axis=0)
    log_c_closed = 0.5 * (np.log(pi_values) - math.log(kappa) + log_sum)
    expected_sign = _expected_connection_sign(family, n)

    gap = float(np.max(np.abs(np.expm1(log_c - log_c_closed))))
    sign_mismatch = int(np.count_nonzero(classical_sign != expected_sign))
    if gap > settings.tol_identity or sign_mismatch:
        raise NumericFailure(
            f"connection constants disagree: relative gap {gap:.2e}, {sign_mismatch} sign mismatches",
            diagnostics={"family": family.label(), "n": n, "gap": gap, "sign_mismatches": sign_mismatch},
        )

    # values[k, i] = P+_{N-1-k}(z_i) / P+_{N-1}(z_i)
    reversed_log = log_abs[::-1]
    reversed_sign = signs[::-1] * signs[n - 1]
    with np.errstate(under="ignore"):
        values = reversed_sign * np.exp(reversed_log - log_c)

    logger.info(f"Built dual basis for {family.label()} at N={n}")
    logger.debug(f"Connection constant gap {gap:.2e}")

    return DualBasis(
        family=family,
        n=n,
        values=values,
        connection_log_abs=log_c,
        connection_sign=classical_sign,
        pi_at_zeros=pi_values,
        kappa=kappa,
    )


def dual_recurrence_residual(dual: DualBasis, zeroset: ZeroSet) -> float:
    """
    Largest residual of the dual recurrence on the table, relative to the
    largest table entry in the same column; row N-1 uses b_0 = 0.
    """
    n = dual.n
    coefficients = dual_recurrence(dual.family, n)
    a = coefficients.a
    b = np.concatenate((coefficients.b, [0.0]))
    q = dual.values
    x = zeroset.zeros[None, :]
    upper = np.vstack((q[1:], np.zeros((1, n))))
    lower = np.vstack((np.zeros((1, n)), q[:-1]))
    b_lower = np.concatenate(([0.0], b[:-1]))
    residual = x * q - (b[:, None] * upper + a[:, None] * q + b_lower[:, None] * lower)
    scale = np.max(np.abs(q), axis=0) * np.maximum(1.0, np.abs(zeroset.zeros))
    return float(np.max(np.abs(residual) / scale[None, :]))


def dual_orthogonality_residual(dual: DualBasis, zeroset: ZeroSet) -> float:
    """||Q W* Q^T - I||_max with W* the dual Christoffel numbers"""
    gram = (dual.values * zeroset.dual_christoffel[None, :]) @ dual.values.T
    return float(np.max(np.abs(gram - np.eye(dual.n))))


def eigenvector_matrix(dual: DualBasis, zeroset: ZeroSet) -> np.ndarray:
    """
    T_N[i, j] = sqrt(pi(z_i) / kappa_N) Q~_{j}(z_i), columns indexed from 0

    Raises:
        NumericFailure: T_N is not orthogonal to the configured tolerance
    """
    if dual.n != zeroset.n:
        raise DomainError(f"dual basis of order {dual.n} does not match {zeroset.n} zeros")
    weights = np.sqrt(dual.pi_at_zeros / dual.kappa)
    t_matrix = weights[:, None] * dual.values.T
    defect = float(np.max(np.abs(t_matrix.T @ t_matrix - np.eye(dual.n))))
    if defect > settings.tol_orthogonality:
        raise NumericFailure(
            f"T_N orthogonality defect {defect:.2e}",
            diagnostics={"family": dual.family.label(), "n": dual.n, "defect": defect},
        )
    return t_matrix
