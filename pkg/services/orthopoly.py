"""
Classical orthogonal polynomials: recurrence coefficients, orthonormal
evaluation and Gauss quadrature by the Golub-Welsch eigenproblem.

Internally every family uses the positive-leading orthonormal normalization
P+_n. The public evaluators return the classical signs, which differ only for
Laguerre: L~_n = (-1)^n P+_n.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from config.config import settings
from models.models import PolynomialFamily, RecurrenceCoefficients, ZeroSet
from services.tridiagonal import tridiagonal_eigen
from utils.errors import DomainError, NumericFailure

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# Rescale the running recurrence once values leave this range
_RESCALE_THRESHOLD = 1e120


@dataclass(frozen=True)
class ScaledTable:
    """
    Polynomial values p_k(x_i) = mantissa[k, i] * exp(log_scale[k, i]).

    Derivatives share the log scale of the values in the same row.
    """
    mantissa: np.ndarray
    log_scale: np.ndarray
    derivative_mantissa: np.ndarray

    def log_abs(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(np.abs(self.mantissa)) + self.log_scale

    def sign(self) -> np.ndarray:
        return np.sign(self.mantissa)

    def values(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return self.mantissa * np.exp(self.log_scale)

    def derivative_values(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return self.derivative_mantissa * np.exp(self.log_scale)

    def derivative_log_abs(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(np.abs(self.derivative_mantissa)) + self.log_scale

    def with_signs(self, signs: np.ndarray) -> "ScaledTable":
        """Multiply row k by signs[k]"""
        column = np.asarray(signs, dtype=float)[:, None]
        return ScaledTable(self.mantissa * column, self.log_scale, self.derivative_mantissa * column)


def _check_degree(n: int, name: str = "n") -> None:
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise DomainError(f"{name} must be a positive integer, got {n!r}")


def _jacobi_coefficients(alpha: float, beta: float, n: int):
    s = alpha + beta
    a = np.empty(n)
    b = np.empty(n - 1)
    a[0] = (beta - alpha) / (s + 2.0)
    for k in range(1, n):
        a[k] = (beta * beta - alpha * alpha) / ((2 * k + s) * (2 * k + s + 2.0))
    for k in range(1, n):
        if k == 1:
            # (1 + s) cancels; the general form is 0/0 when alpha + beta = -1
            u = 4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + s) ** 2 * (3.0 + s))
        else:
            u = (
                4.0 * k * (k + alpha) * (k + beta) * (k + s)
                / ((2 * k + s) ** 2 * (2 * k + s + 1.0) * (2 * k + s - 1.0))
            )
        b[k - 1] = math.sqrt(u)
    return a, b


def recurrence_coefficients(family: PolynomialFamily, n: int) -> RecurrenceCoefficients:
    """
    Orthonormal recurrence coefficients a_0..a_{n-1} and b_1..b_{n-1}

    The orthogonality measure is normalized to a probability measure, so P~_0 = 1.
    """
    _check_degree(n)
    k = np.arange(n, dtype=float)
    if family.kind == "hermite":
        a = np.zeros(n)
        b = np.sqrt(k[1:] / 2.0)
    elif family.kind == "laguerre":
        a = 2.0 * k + family.alpha + 1.0
        b = np.sqrt(k[1:] * (k[1:] + family.alpha))
    else:
        a, b = _jacobi_coefficients(family.alpha, family.beta, n)
    return RecurrenceCoefficients(a=a, b=b)


def leading_sign(family: PolynomialFamily, n: Union[int, np.ndarray]) -> Union[float, np.ndarray]:
    """Sign of the leading coefficient of the classical orthonormal polynomial of degree n"""
    if family.kind == "laguerre":
        return np.where(np.asarray(n) % 2 == 0, 1.0, -1.0) if np.ndim(n) else (-1.0) ** int(n)
    return np.ones(np.shape(n)) if np.ndim(n) else 1.0


def evaluate_recurrence(coefficients: RecurrenceCoefficients, n_max: int, x: ArrayLike) -> ScaledTable:
    """
    Run a positive-leading orthonormal three-term recurrence up to degree n_max.

    Uses a_0..a_{n_max-1} and b_1..b_{n_max}. Values and derivatives are rescaled
    together so that large N stays within binary64 range.
    """
    a, b = coefficients.a, coefficients.b
    if n_max < 0:
        raise DomainError(f"n_max must be >= 0, got {n_max}")
    if n_max > len(b):
        raise DomainError(f"recurrence of length {len(a)} cannot reach degree {n_max}")

    xs = np.atleast_1d(np.asarray(x, dtype=float))
    m = xs.size
    mantissa = np.empty((n_max + 1, m))
    log_scale = np.zeros((n_max + 1, m))
    derivative = np.empty((n_max + 1, m))

    p_prev = np.zeros(m)
    p = np.ones(m)
    dp_prev = np.zeros(m)
    dp = np.zeros(m)
    scale = np.zeros(m)
    mantissa[0] = p
    derivative[0] = dp

    for n in range(n_max):
        b_prev = b[n - 1] if n >= 1 else 0.0
        b_next = b[n]
        shifted = xs - a[n]
        p_next = (shifted * p - b_prev * p_prev) / b_next
        dp_next = (shifted * dp + p - b_prev * dp_prev) / b_next
        p_prev, p = p, p_next
        dp_prev, dp = dp, dp_next

        size = np.maximum(np.abs(p), np.abs(dp))
        large = size > _RESCALE_THRESHOLD
        if np.any(large):
            factor = np.where(large, 1.0 / np.where(large, size, 1.0), 1.0)
            p = p * factor
            p_prev = p_prev * factor
            dp = dp * factor
            dp_prev = dp_prev * factor
            scale = scale - np.log(factor)

        mantissa[n + 1] = p
        derivative[n + 1] = dp
        log_scale[n + 1] = scale

    return ScaledTable(mantissa, log_scale, derivative)


def orthonormal_table(family: PolynomialFamily, n_max: int, xs: ArrayLike, classical_sign: bool = True) -> ScaledTable:
    """Log-scaled table of P~_0..P~_{n_max} (and derivatives) at the points xs"""
    if n_max < 0:
        raise DomainError(f"n_max must be >= 0, got {n_max}")
    table = evaluate_recurrence(recurrence_coefficients(family, n_max + 1), n_max, xs)
    if classical_sign and family.kind == "laguerre":
        table = table.with_signs(leading_sign(family, np.arange(n_max + 1)))
    return table


def eval_orthonormal(family: PolynomialFamily, n_max: int, x: float) -> np.ndarray:
    """
    Values (P~_0(x), ..., P~_{n_max}(x)) of the orthonormal polynomials

    Args:
        family: Polynomial family
        n_max: Highest degree
        x: Evaluation point

    Returns:
        Array of length n_max + 1, classical sign convention
    """
    return orthonormal_table(family, n_max, x).values()[:, 0]


def eval_orthonormal_derivative(family: PolynomialFamily, n: int, x: float) -> float:
    """Derivative P~_n'(x) from the coupled derivative recurrence"""
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    table = orthonormal_table(family, n, x)
    return float(table.derivative_values()[n, 0])


def pi_function(family: PolynomialFamily, x: ArrayLike) -> ArrayLike:
    """pi(x) with w_i* = pi(z_i) / kappa_N: 1, x or 1 - x^2"""
    x = np.asarray(x, dtype=float)
    if family.kind == "hermite":
        return np.ones_like(x)
    if family.kind == "laguerre":
        return x.copy()
    return 1.0 - x * x


def kappa_constant(family: PolynomialFamily, n: int) -> float:
    """kappa_N in w_i* = pi(z_i) / kappa_N"""
    _check_degree(n, "N")
    if family.kind == "hermite":
        return float(n)
    alpha = family.alpha
    if family.kind == "laguerre":
        return n * (n + alpha)
    beta = family.beta
    s = alpha + beta
    if n == 1:
        return 4.0 * (1.0 + alpha) * (1.0 + beta) / (2.0 + s) ** 2
    return 4.0 * n * (n + alpha) * (n + beta) * (n + s) / ((2 * n + s) ** 2 * (2 * n + s - 1.0))


def measure_moments(family: PolynomialFamily, m_max: int) -> np.ndarray:
    """Moments E[X^m], m = 0..m_max, of the orthogonality probability measure"""
    moments = np.zeros(m_max + 1)
    moments[0] = 1.0
    if family.kind == "hermite":
        # density exp(-x^2)/sqrt(pi): E[X^2j] = (2j-1)!!/2^j
        for m in range(2, m_max + 1, 2):
            moments[m] = moments[m - 2] * (m - 1) / 2.0
        return moments
    if family.kind == "laguerre":
        for m in range(1, m_max + 1):
            moments[m] = moments[m - 1] * (family.alpha + m)
        return moments
    # X = 2T - 1 with T ~ Beta(beta + 1, alpha + 1)
    alpha, beta = family.alpha, family.beta
    beta_moments = np.ones(m_max + 1)
    for j in range(1, m_max + 1):
        beta_moments[j] = beta_moments[j - 1] * (beta + j) / (alpha + beta + 1.0 + j)
    for m in range(1, m_max + 1):
        moments[m] = math.fsum(
            math.comb(m, j) * 2.0 ** j * (-1.0) ** (m - j) * beta_moments[j] for j in range(m + 1)
        )
    return moments


def _polish_zeros(coefficients: RecurrenceCoefficients, n: int, zeros: np.ndarray) -> np.ndarray:
    table = evaluate_recurrence(coefficients, n, zeros)
    step = table.mantissa[n] / table.derivative_mantissa[n]
    if n > 1:
        gaps = np.diff(zeros)
        spacing = np.minimum(np.concatenate(([gaps[0]], gaps)), np.concatenate((gaps, [gaps[-1]])))
        step = np.where(np.abs(step) < 0.1 * spacing, step, 0.0)
    polished = zeros - step
    if n > 1 and not np.all(np.diff(polished) > 0.0):
        return zeros
    return polished


def zeros_and_weights(family: PolynomialFamily, n: int, polish: bool = True) -> ZeroSet:
    """
    Zeros of P~_N with Christoffel and dual Christoffel numbers

    Args:
        family: Polynomial family
        n: Degree N
        polish: Apply one Newton step on P~_N / P~_N' to the eigenvalues

    Returns:
        ZeroSet with zeros ascending

    Raises:
        DomainError: N outside 1..max_degree
        NumericFailure: eigensolver failure or dual weights disagreeing with pi / kappa_N
    """
    _check_degree(n, "N")
    if n > settings.max_degree:
        raise DomainError(f"N = {n} exceeds the configured maximum degree {settings.max_degree}")

    coefficients = recurrence_coefficients(family, n + 1)
    eigenvalues, first = tridiagonal_eigen(coefficients.a[:n], coefficients.b[: n - 1], settings.eig_max_iterations)
    zeros = _polish_zeros(coefficients, n, eigenvalues) if polish else eigenvalues

    table = evaluate_recurrence(coefficients, n, zeros)
    log_values = table.log_abs()
    log_derivative = table.derivative_log_abs()
    sign_product = np.sign(table.mantissa[n - 1]) * np.sign(table.derivative_mantissa[n])
    if np.any(sign_product <= 0.0):
        raise NumericFailure(
            "P_{N-1} P_N' is not positive at every zero",
            diagnostics={"family": family.label(), "n": n},
        )

    log_b = math.log(coefficients.b[n - 1])
    log_christoffel = -log_b - log_values[n - 1] - log_derivative[n]
    log_dual = log_values[n - 1] - log_b - log_derivative[n]
    with np.errstate(under="ignore"):
        christoffel = np.exp(log_christoffel)
    dual_christoffel = np.exp(log_dual)

    closed_form = pi_function(family, zeros) / kappa_constant(family, n)
    gap = float(np.max(np.abs(dual_christoffel / closed_form - 1.0)))
    if gap > settings.tol_identity:
        raise NumericFailure(
            f"dual Christoffel numbers disagree with pi/kappa_N by {gap:.2e}",
            diagnostics={"family": family.label(), "n": n, "gap": gap},
        )

    golub_welsch = first * first
    if np.any(golub_welsch == 0.0):
        logger.warning(f"Christoffel numbers underflow for {family.label()} at N={n}")

    logger.info(f"Computed {n} zeros for {family.label()}")
    logger.debug(f"Dual Christoffel closed-form gap {gap:.2e}")

    return ZeroSet(
        family=family,
        n=n,
        zeros=zeros,
        christoffel=christoffel,
        dual_christoffel=dual_christoffel,
        christoffel_golub_welsch=golub_welsch,
        log_christoffel=log_christoffel,
    )


def polynomial_residual(zeroset: ZeroSet, coefficients: Optional[RecurrenceCoefficients] = None) -> float:
    """max_i |P~_N(z_i)| relative to the largest |P~_k(z_i)|, k < N"""
    n = zeroset.n
    coefficients = coefficients or recurrence_coefficients(zeroset.family, n + 1)
    table = evaluate_recurrence(coefficients, n, zeroset.zeros)
    log_abs = table.log_abs()
    reference = np.max(log_abs[:n], axis=0)
    with np.errstate(under="ignore"):
        return float(np.max(np.exp(log_abs[n] - reference)))


def hermite_laguerre_symmetry_gap(n: int) -> float:
    """
    H_{2n}(x) is proportional to L_n^(-1/2)(x^2): the squared positive zeros of
    H~_{2n} against the zeros of L~_n^(-1/2), as a max relative gap
    """
    hermite = zeros_and_weights(PolynomialFamily.hermite(), 2 * n).zeros[n:]
    laguerre = zeros_and_weights(PolynomialFamily.laguerre(-0.5), n).zeros
    return float(np.max(np.abs(hermite ** 2 / laguerre - 1.0)))
