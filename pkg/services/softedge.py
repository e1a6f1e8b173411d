"""
Soft-edge asymptotics of the frozen Hermite and Laguerre ensembles: the
profile of the edge eigenvector and its Airy limit, the edge variance
integrals and convergence tables over N.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from config.config import settings
from models.models import (
    DEVarianceReport,
    EdgeProfile,
    EdgeVariance,
    EnsembleSpec,
    PlancherelRotachRow,
    PolynomialFamily,
    ProfileTrendRow,
    TrendRow,
)
from services.airy import default_evaluator, taylor_coefficients
from services.dualbasis import build_dual_basis, eigenvector_matrix
from services.freezecov import build_freezing_covariance
from services.orthopoly import zeros_and_weights
from services.quadrature import QuadratureResult, adaptive_integrate
from utils.errors import DomainError
from utils.validators import validate_grid

logger = logging.getLogger(__name__)

_SERIES_PANEL = 0.25
_TAIL_OFFSET = 12.0
_CBRT2 = 2.0 ** (1.0 / 3.0)


def _edge_family(ensemble: str, alpha: float) -> PolynomialFamily:
    if ensemble == "hermite":
        return PolynomialFamily.hermite()
    if ensemble == "laguerre":
        return PolynomialFamily.laguerre(alpha)
    raise DomainError(f"soft-edge asymptotics are available for hermite and laguerre, got {ensemble!r}")


def _check_edge_index(ensemble: str, n: int, r: int, side: str = "upper") -> None:
    if r < 1 or r > n:
        raise DomainError(f"edge index r must lie in 1..{n}, got {r}")
    if ensemble == "laguerre" and r != 1:
        raise DomainError("the Laguerre edge profile is defined for r = 1 only")
    if side == "lower" and ensemble != "hermite":
        raise DomainError("the lower edge is available for hermite only")


def edge_column(ensemble: str, n: int, r: int = 1, alpha: float = 0.0, side: str = "upper") -> np.ndarray:
    """
    q_k, k = 0..N-1: the row of T_N at the r-th extreme zero

    Hermite: q_k = Q~_k(z) / sqrt(N); Laguerre: q_k = sqrt(z) Q~_k(z) / sqrt(N(N+alpha)).
    On the lower side the reflection z_r = -z_{N-r+1} is undone by (-1)^k.
    """
    _check_edge_index(ensemble, n, r, side)
    zeroset = zeros_and_weights(_edge_family(ensemble, alpha), n)
    t_matrix = eigenvector_matrix(build_dual_basis(zeroset), zeroset)
    if side == "lower":
        return t_matrix[r - 1] * (-1.0) ** np.arange(n)
    return t_matrix[n - r]


def limit_profile(ensemble: str, r: int, y: np.ndarray) -> np.ndarray:
    """Ai(y + a_r) / Ai'(a_r) (Hermite) or 2^(1/3) Ai(2^(2/3) y + a_1) / Ai'(a_1) (Laguerre)"""
    evaluator = default_evaluator()
    a_r = evaluator.airy_zero(r)
    slope = evaluator.ai_prime(a_r)
    y = np.asarray(y, dtype=float)
    if ensemble == "hermite":
        return evaluator.ai(y + a_r) / slope
    if ensemble == "laguerre":
        return _CBRT2 * evaluator.ai(_CBRT2 ** 2 * y + a_r) / slope
    raise DomainError(f"no Airy limit for {ensemble!r}")


def limit_slope_at_zero(ensemble: str, r: int = 1, h: float = 1e-4) -> Tuple[float, float]:
    """(f(0), f'(0)) of the limit profile, the slope by a central difference"""
    values = limit_profile(ensemble, r, np.array([-h, 0.0, h]))
    return float(values[1]), float((values[2] - values[0]) / (2.0 * h))


def edge_profile(
    ensemble: str,
    n: int,
    grid: Sequence[float],
    r: int = 1,
    alpha: float = 0.0,
    side: str = "upper",
) -> EdgeProfile:
    """
    f_N(y) = N^(1/6) q_{floor(N^(1/3) y)} and its Airy limit on the grid

    Raises:
        DomainError: grid outside [0, N^(2/3)) or unsupported ensemble/edge
    """
    _check_edge_index(ensemble, n, r, side)
    ys = validate_grid(grid, n ** (2.0 / 3.0))
    column = edge_column(ensemble, n, r, alpha, side)
    index = np.minimum(np.floor(n ** (1.0 / 3.0) * ys).astype(int), n - 1)
    f_n = n ** (1.0 / 6.0) * column[index]
    profile = EdgeProfile(
        ensemble=ensemble,
        n=n,
        r=r,
        side=side,
        grid=ys,
        f_n_values=f_n,
        f_limit_values=limit_profile(ensemble, r, ys),
    )
    logger.debug(f"Edge profile {ensemble} N={n} r={r} {side}: sup error {profile.sup_error:.3e}")
    return profile


def step_profile_area(ensemble: str, n: int, r: int = 1, alpha: float = 0.0) -> float:
    """Integral of f_N^2 over [0, N^(2/3)) read off the step function"""
    column = edge_column(ensemble, n, r, alpha)
    steps = n ** (1.0 / 6.0) * column
    return math.fsum(n ** (-1.0 / 3.0) * steps ** 2)


def _fan_out(function: Callable, items: Sequence) -> list:
    with ThreadPoolExecutor(max_workers=max(1, settings.threads)) as executor:
        return list(executor.map(function, items))


def profile_trend(
    ensemble: str,
    n_list: Sequence[int],
    r: int = 1,
    alpha: float = 0.0,
    y_max: float = 4.0,
    points: int = 401,
) -> Tuple[List[ProfileTrendRow], float]:
    """
    Sup errors of f_N on [0, y_max] for every N and the fitted log-log rate

    Returns:
        Rows in input order and the slope of log(sup error) against log N
        (nan with fewer than two N)
    """
    def sup_error(n: int) -> ProfileTrendRow:
        upper = min(y_max, n ** (2.0 / 3.0) * (1.0 - 1e-12))
        grid = np.linspace(0.0, upper, points)
        return ProfileTrendRow(n=n, sup_error=edge_profile(ensemble, n, grid, r=r, alpha=alpha).sup_error)

    rows = _fan_out(sup_error, list(n_list))
    if len(rows) < 2:
        return rows, float("nan")
    slope = np.polyfit(np.log([row.n for row in rows]), np.log([row.sup_error for row in rows]), 1)[0]
    logger.info(f"Profile trend {ensemble} r={r}: fitted rate exponent {slope:.3f}")
    return rows, float(slope)


# ------------------------------------------------------------------ variances


def _breakpoints(r: int, a_r: float, start: float) -> np.ndarray:
    """Panel ends: start, the shifted zeros a_s - a_r, unit steps up to |a_r| + 12"""
    evaluator = default_evaluator()
    upper = abs(a_r) + _TAIL_OFFSET
    shifted = [evaluator.airy_zero(s) - a_r for s in range(1, r)]
    points = np.unique(np.concatenate(([start, upper], np.arange(start, upper, 1.0), shifted)))
    points = points[(points >= start) & (points <= upper)]
    keep = np.concatenate(([True], np.diff(points) > 1e-3))
    return points[keep]


def _l2_tail(u: float) -> float:
    """Exact tail of the Airy square: int_u^inf Ai^2 = Ai'(u)^2 - u Ai(u)^2"""
    evaluator = default_evaluator()
    return evaluator.ai_prime(u) ** 2 - u * evaluator.ai(u) ** 2


def variance_integral(r: int = 1) -> EdgeVariance:
    """
    sigma^2_max,r = int_0^inf Ai(x + a_r)^2 / (Ai'(a_r)^2 x) dx

    The first panel uses the Taylor series of Ai about a_r, so the integrand
    is x (sum c_{n+1} x^n)^2 / Ai'(a_r)^2 there. The tail beyond |a_r| + 12
    is bounded by the exact L2 tail and added to the error estimate.

    Raises:
        DomainError: r < 1
        NumericFailure: quadrature did not converge
    """
    if r < 1:
        raise DomainError(f"r must be >= 1, got {r}")
    evaluator = default_evaluator()
    a_r = evaluator.airy_zero(r)
    slope = evaluator.ai_prime(a_r)
    series = taylor_coefficients(a_r, 0.0, slope, 48)[1:]

    def integrand(x: np.ndarray) -> np.ndarray:
        out = np.empty_like(x)
        near = x <= _SERIES_PANEL
        if np.any(near):
            quotient = np.polynomial.polynomial.polyval(x[near], series)
            out[near] = x[near] * quotient ** 2
        if np.any(~near):
            far = x[~near]
            out[~near] = evaluator.ai(far + a_r) ** 2 / far
        return out / slope ** 2

    points = np.concatenate(([0.0], _breakpoints(r, a_r, _SERIES_PANEL)))
    result = adaptive_integrate(integrand, points)
    x_max = float(points[-1])
    tail = _l2_tail(x_max + a_r) / (x_max * slope ** 2)
    logger.debug(f"sigma^2_max,{r} = {result.value:.12f} (error {result.error:.1e}, tail {tail:.1e})")
    return EdgeVariance(r=r, value=result.value, error=result.error + tail)


def _power_integral(r: int, power: int) -> QuadratureResult:
    """int_0^inf Ai(x + a_r)^power dx"""
    evaluator = default_evaluator()
    a_r = evaluator.airy_zero(r)
    points = _breakpoints(r, a_r, 0.0)
    return adaptive_integrate(lambda x: evaluator.ai(x + a_r) ** power, points)


def variance_integral_de(r: int = 1) -> DEVarianceReport:
    """
    Quartic form 2 int (Ai(x + a_r) / Ai'(a_r))^4 dx and the ratio
    2 int Ai^4 / (int Ai^2)^2, with int_0^inf Ai(x + a_r)^2 dx for the
    normalization identity against Ai'(a_r)^2.
    """
    if r < 1:
        raise DomainError(f"r must be >= 1, got {r}")
    evaluator = default_evaluator()
    slope_squared = evaluator.ai_prime(evaluator.airy_zero(r)) ** 2
    quartic = _power_integral(r, 4).value
    l2 = _power_integral(r, 2).value
    return DEVarianceReport(
        r=r,
        quartic=2.0 * quartic / slope_squared ** 2,
        ratio_form=2.0 * quartic / l2 ** 2,
        l2_integral=l2,
        ai_prime_squared=slope_squared,
    )


def variance_integral_laguerre() -> float:
    """Published Laguerre edge constant, half the Hermite r = 1 value"""
    return variance_integral(1).value / 2.0


def laguerre_diagonal_limit() -> float:
    """
    Limit of N^(1/3) sigma_NN for the Laguerre ensemble

    With the profile 2^(1/3) Ai(2^(2/3) y + a_1) / Ai'(a_1) and eigenvalues 2j,
    the substitution x = 2^(2/3) y leaves a factor 2^(2/3) on top of the
    published half value.
    """
    return _CBRT2 ** 2 * variance_integral_laguerre()


def airy_normalization_check(r: int = 1) -> float:
    """|int_0^inf Ai(x + a_r)^2 dx / Ai'(a_r)^2 - 1|"""
    report = variance_integral_de(r)
    return abs(report.l2_integral / report.ai_prime_squared - 1.0)


def edge_variances(r_max: int) -> List[EdgeVariance]:
    """Variance rows r = 1..r_max with the quartic form for every r and the Laguerre value at r = 1"""
    if r_max < 1:
        raise DomainError(f"r_max must be >= 1, got {r_max}")

    def row(r: int) -> EdgeVariance:
        variance = variance_integral(r)
        update = {"de_value": variance_integral_de(r).quartic}
        if r == 1:
            update["laguerre_value"] = variance.value / 2.0
        return variance.model_copy(update=update)

    rows = _fan_out(row, list(range(1, r_max + 1)))
    logger.info(f"Computed edge variances for r = 1..{r_max}")
    return rows


def variance_decay_fit(rows: Sequence[EdgeVariance], r_min: int = 5) -> float:
    """C = max over r >= r_min of sigma^2_max,r r^(1/3) / log r"""
    ratios = [row.value * row.r ** (1.0 / 3.0) / math.log(row.r) for row in rows if row.r >= max(r_min, 2)]
    if not ratios:
        raise DomainError(f"no rows with r >= {max(r_min, 2)}")
    return max(ratios)


def integral_equation_residual(r: int = 1, ys: Optional[Sequence[float]] = None) -> float:
    """
    max over ys of |f(y) - int_0^y (t + a_r)(y - t) f(t) dt - y| for the
    Hermite limit profile f
    """
    ys = np.linspace(0.0, 4.0, 9) if ys is None else np.asarray(ys, dtype=float)
    evaluator = default_evaluator()
    a_r = evaluator.airy_zero(r)
    worst = 0.0
    for y in ys:
        if y <= 0.0:
            continue
        f_y = float(limit_profile("hermite", r, np.array([y]))[0])
        kernel = lambda t, y=y: (t + a_r) * (y - t) * limit_profile("hermite", r, t)
        points = np.linspace(0.0, y, max(2, int(math.ceil(y)) + 1))
        integral = adaptive_integrate(kernel, points).value
        worst = max(worst, abs(f_y - integral - y))
    return worst


# --------------------------------------------------------------- trend tables


def _edge_spec(ensemble: str, n: int, nu: float) -> EnsembleSpec:
    if ensemble not in ("hermite", "laguerre"):
        raise DomainError(f"edge trends are available for hermite and laguerre, got {ensemble!r}")
    return EnsembleSpec(kind=ensemble, n=n, nu=nu)


def sigma_trend(ensemble: str, n_list: Sequence[int], r: int = 1, nu: float = 1.0) -> List[TrendRow]:
    """
    N^(1/3) sigma_{N-r+1,N-r+1} for every N against its soft-edge limit

    Work is spread over settings.threads workers; rows keep input order.
    """
    n_list = list(n_list)
    for n in n_list:
        _check_edge_index(ensemble, n, r)
    limit = laguerre_diagonal_limit() if ensemble == "laguerre" else variance_integral(r).value

    def row(n: int) -> TrendRow:
        fc = build_freezing_covariance(_edge_spec(ensemble, n, nu))
        value = n ** (1.0 / 3.0) * float(fc.sigma_matrix[n - r, n - r])
        return TrendRow(n=n, value=value, limit=limit, gap=abs(value - limit))

    rows = _fan_out(row, n_list)
    logger.info(f"sigma trend {ensemble} r={r}: {len(rows)} rows")
    return rows


def plancherel_rotach_check(
    ensemble: str, n_list: Sequence[int], r: int = 1, alpha: float = 0.0
) -> List[PlancherelRotachRow]:
    """
    Extreme zeros against their Airy asymptotes

    Hermite: z_{N-r+1}/sqrt(2N) against 1 - |a_r| / (2 N^(2/3));
    Laguerre: z_{N-r+1}/(4N) against 1 + a_r / (2N)^(2/3).
    """
    a_r = default_evaluator().airy_zero(r)
    family = _edge_family(ensemble, alpha)

    def row(n: int) -> PlancherelRotachRow:
        if n < r:
            raise DomainError(f"N = {n} is below r = {r}")
        z = zeros_and_weights(family, n).zeros[n - r]
        if ensemble == "hermite":
            lhs, asymptote = z / math.sqrt(2.0 * n), 1.0 - abs(a_r) / (2.0 * n ** (2.0 / 3.0))
        else:
            lhs, asymptote = z / (4.0 * n), 1.0 + a_r / (2.0 * n) ** (2.0 / 3.0)
        residual = abs(lhs - asymptote)
        return PlancherelRotachRow(n=n, r=r, lhs=lhs, asymptote=asymptote, residual=residual, scaled_residual=n * residual)

    return _fan_out(row, list(n_list))


def rescaled_edge_statistic(x_max: np.ndarray, t: float, k: float, n: int) -> np.ndarray:
    """
    Centered soft-edge statistic of the largest Hermite particle

    N^(2/3) (X / sqrt(tN) - 2 sqrt(k)) + sqrt(k) |a_1| - 2 sqrt(k) N^(2/3) rho_N,
    with rho_N = z_N / sqrt(2N) - 1 + |a_1| / (2 N^(2/3)). Its variance tends to
    N^(1/3) sigma_NN as k grows.
    """
    if t <= 0.0 or k <= 0.0:
        raise DomainError("t and k must be positive")
    a_1 = abs(default_evaluator().airy_zero(1))
    z_max = zeros_and_weights(PolynomialFamily.hermite(), n).zeros[-1]
    scale = n ** (2.0 / 3.0)
    rho = z_max / math.sqrt(2.0 * n) - 1.0 + a_1 / (2.0 * scale)
    root_k = math.sqrt(k)
    x_max = np.asarray(x_max, dtype=float)
    return scale * (x_max / math.sqrt(t * n) - 2.0 * root_k) + root_k * a_1 - 2.0 * root_k * scale * rho
