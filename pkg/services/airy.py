"""
Airy function Ai, its derivatives and its zeros on the real line.

On [-cutoff, cutoff] values come from local power series of y'' = x y at
equally spaced nodes. The node data is propagated leftwards from Ai(0), Ai'(0)
and, on the positive side, leftwards from the exponential asymptotic series at
+cutoff, which is the stable direction for the recessive solution. Beyond the
cutoff the asymptotic series are summed to their smallest term.
"""
import functools
import logging
import math
import threading
from typing import Dict, Tuple, Union

import numpy as np

from config.config import settings
from utils.errors import DomainError, NumericFailure

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

AI_ZERO = 1.0 / (3.0 ** (2.0 / 3.0) * math.gamma(2.0 / 3.0))
AI_PRIME_ZERO = -1.0 / (3.0 ** (1.0 / 3.0) * math.gamma(1.0 / 3.0))
_SQRT_PI = math.sqrt(math.pi)


def taylor_coefficients(x0: float, y0: float, y1: float, terms: int) -> np.ndarray:
    """Coefficients c_n of the solution of y'' = x y with y(x0) = y0, y'(x0) = y1 in powers of (x - x0)"""
    c = np.zeros(terms)
    c[0] = y0
    if terms > 1:
        c[1] = y1
    if terms > 2:
        c[2] = 0.5 * x0 * y0
    for n in range(1, terms - 2):
        c[n + 2] = (x0 * c[n] + c[n - 1]) / ((n + 2) * (n + 1))
    return c


def _horner(coefficients: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Evaluate rows of coefficients (m, K) at t (m,)"""
    acc = np.zeros_like(t)
    for k in range(coefficients.shape[1] - 1, -1, -1):
        acc = acc * t + coefficients[:, k]
    return acc


def _series_coefficients(terms: int) -> Tuple[np.ndarray, np.ndarray]:
    u = np.ones(terms)
    for k in range(1, terms):
        u[k] = u[k - 1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216.0 * k)
    k = np.arange(terms)
    v = -(6 * k + 1) / (6 * k - 1) * u
    return u, v


class AiryEvaluator:
    """Ai, Ai', Ai'' on the real line plus a cache of the zeros a_r"""

    def __init__(
        self,
        series_cutoff: float = 8.0,
        asymptotic_terms: int = 30,
        node_spacing: float = 0.5,
        taylor_terms: int = 48,
    ):
        if series_cutoff <= 0.0 or node_spacing <= 0.0:
            raise DomainError("series_cutoff and node_spacing must be positive")
        steps = series_cutoff / node_spacing
        if abs(steps - round(steps)) > 1e-9:
            raise DomainError(f"series_cutoff {series_cutoff} must be a multiple of node_spacing {node_spacing}")
        if asymptotic_terms < 2 or taylor_terms < 4:
            raise DomainError("asymptotic_terms must be >= 2 and taylor_terms >= 4")

        self.series_cutoff = float(series_cutoff)
        self.asymptotic_terms = int(asymptotic_terms)
        self.node_spacing = float(node_spacing)
        self.taylor_terms = int(taylor_terms)
        self.zero_cache: Dict[int, float] = {}
        self._lock = threading.Lock()

        self._u, self._v = _series_coefficients(self.asymptotic_terms)
        self._build_nodes()

    # ------------------------------------------------------------------ nodes

    def _build_nodes(self) -> None:
        h = self.node_spacing
        count = int(round(2.0 * self.series_cutoff / h))
        self._nodes = -self.series_cutoff + h * np.arange(count + 1)
        middle = count // 2
        coefficients = np.zeros((count + 1, self.taylor_terms))

        coefficients[middle] = taylor_coefficients(0.0, AI_ZERO, AI_PRIME_ZERO, self.taylor_terms)
        for j in range(middle, 0, -1):
            y, yp = self._step(coefficients[j], -h)
            coefficients[j - 1] = taylor_coefficients(self._nodes[j - 1], y, yp, self.taylor_terms)

        top = self._nodes[count]
        y, yp, _ = self._asymptotic_positive(np.array([top]))
        coefficients[count] = taylor_coefficients(top, y[0], yp[0], self.taylor_terms)
        for j in range(count, middle + 1, -1):
            y, yp = self._step(coefficients[j], -h)
            coefficients[j - 1] = taylor_coefficients(self._nodes[j - 1], y, yp, self.taylor_terms)

        self._origin_gap = self._step(coefficients[middle + 1], -h)
        self._coefficients = coefficients
        k = np.arange(self.taylor_terms)
        self._first = coefficients[:, 1:] * k[1:]
        self._second = coefficients[:, 2:] * (k[2:] * (k[2:] - 1))
        logger.debug(f"Airy node table built: {count + 1} nodes on [-{self.series_cutoff}, {self.series_cutoff}]")

    @staticmethod
    def _step(coefficients: np.ndarray, t: float) -> Tuple[float, float]:
        powers = t ** np.arange(len(coefficients))
        value = float(np.dot(coefficients, powers))
        derivative = float(np.dot(coefficients[1:] * np.arange(1, len(coefficients)), powers[:-1]))
        return value, derivative

    # ------------------------------------------------------------- asymptotics

    def _truncation_mask(self, zeta: np.ndarray) -> np.ndarray:
        k = np.arange(self.asymptotic_terms)[:, None]
        with np.errstate(divide="ignore", over="ignore"):
            magnitude = self._u[:, None] * zeta[None, :] ** (-k.astype(float))
        smallest = np.argmin(magnitude, axis=0)
        return k <= smallest[None, :]

    def _asymptotic_positive(self, x: np.ndarray):
        zeta = (2.0 / 3.0) * x ** 1.5
        mask = self._truncation_mask(zeta)
        k = np.arange(self.asymptotic_terms)[:, None]
        alternating = (-1.0) ** k
        powers = np.where(mask, zeta[None, :] ** (-k.astype(float)), 0.0)
        series_u = np.sum(alternating * self._u[:, None] * powers, axis=0)
        series_v = np.sum(alternating * self._v[:, None] * powers, axis=0)
        series_v_prime = np.sum(alternating * (-k) * self._v[:, None] * powers, axis=0) / zeta
        with np.errstate(under="ignore"):
            envelope = np.exp(-zeta) / (2.0 * _SQRT_PI)
        quarter = x ** 0.25
        value = envelope / quarter * series_u
        derivative = -envelope * quarter * series_v
        second = -envelope * (0.25 * series_v / x ** 0.75 - x ** 0.75 * series_v + x ** 0.75 * series_v_prime)
        return value, derivative, second

    def _asymptotic_negative(self, x: np.ndarray):
        z = -x
        zeta = (2.0 / 3.0) * z ** 1.5
        theta = zeta - 0.25 * math.pi
        mask = self._truncation_mask(zeta)
        k = np.arange(self.asymptotic_terms)
        even = k % 2 == 0
        sign = np.where(k % 4 < 2, 1.0, -1.0)[:, None]
        powers = np.where(mask, zeta[None, :] ** (-k[:, None].astype(float)), 0.0)
        weighted_u = sign * self._u[:, None] * powers
        weighted_v = sign * self._v[:, None] * powers
        derivative_v = weighted_v * (-k[:, None]) / zeta[None, :]

        p_u, q_u = weighted_u[even].sum(axis=0), weighted_u[~even].sum(axis=0)
        p_v, q_v = weighted_v[even].sum(axis=0), weighted_v[~even].sum(axis=0)
        dp_v, dq_v = derivative_v[even].sum(axis=0), derivative_v[~even].sum(axis=0)

        cos, sin = np.cos(theta), np.sin(theta)
        quarter = z ** 0.25
        value = (cos * p_u + sin * q_u) / (_SQRT_PI * quarter)
        derivative = quarter * (sin * p_v - cos * q_v) / _SQRT_PI
        d_dz = (
            0.25 * (sin * p_v - cos * q_v) / z ** 0.75
            + z ** 0.75 * (cos * p_v + sin * q_v + sin * dp_v - cos * dq_v)
        ) / _SQRT_PI
        return value, derivative, -d_dz

    # -------------------------------------------------------------- evaluation

    def _evaluate(self, x: ArrayLike, order: int) -> ArrayLike:
        scalar = np.ndim(x) == 0
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        if not np.all(np.isfinite(xs)):
            raise DomainError("Airy functions need finite arguments")
        out = np.empty_like(xs)
        upper = xs > self.series_cutoff
        lower = xs < -self.series_cutoff
        middle = ~(upper | lower)

        if np.any(middle):
            points = xs[middle]
            index = np.clip(np.rint((points - self._nodes[0]) / self.node_spacing).astype(int), 0, len(self._nodes) - 1)
            t = points - self._nodes[index]
            table = (self._coefficients, self._first, self._second)[order]
            out[middle] = _horner(table[index], t)
        if np.any(upper):
            out[upper] = self._asymptotic_positive(xs[upper])[order]
        if np.any(lower):
            out[lower] = self._asymptotic_negative(xs[lower])[order]
        return float(out[0]) if scalar else out

    def ai(self, x: ArrayLike) -> ArrayLike:
        """Ai(x)"""
        return self._evaluate(x, 0)

    def ai_prime(self, x: ArrayLike) -> ArrayLike:
        """Ai'(x)"""
        return self._evaluate(x, 1)

    def ai_second(self, x: ArrayLike) -> ArrayLike:
        """Ai''(x) from the branch representation itself"""
        return self._evaluate(x, 2)

    def local_series(self, x0: float, terms: int = 40) -> np.ndarray:
        """Taylor coefficients of Ai about x0"""
        return taylor_coefficients(x0, self.ai(x0), self.ai_prime(x0), terms)

    # -------------------------------------------------------------- diagnostics

    def ode_residual(self, xs: np.ndarray) -> float:
        """max |Ai'' - x Ai| relative to max(1, |x|) (|Ai| + |Ai'| / sqrt(max(1, |x|)))"""
        xs = np.asarray(xs, dtype=float)
        value, derivative, second = self.ai(xs), self.ai_prime(xs), self.ai_second(xs)
        reach = np.maximum(1.0, np.abs(xs))
        scale = reach * (np.abs(value) + np.abs(derivative) / np.sqrt(reach))
        return float(np.max(np.abs(second - xs * value) / scale))

    def continuity_gaps(self, samples: int = 41) -> Dict[str, float]:
        """
        Branch agreement: node propagation against Ai(0), Ai'(0), and node
        values against the asymptotic series within half a unit inside each cutoff.
        """
        value, derivative = self._origin_gap
        origin = max(abs(value / AI_ZERO - 1.0), abs(derivative / AI_PRIME_ZERO - 1.0))

        c = self.series_cutoff
        upper = np.linspace(c - 0.5, c, samples)
        table_upper = np.array([self.ai(x) for x in upper])
        positive = float(np.max(np.abs(table_upper / self._asymptotic_positive(upper)[0] - 1.0)))

        lower = np.linspace(-c, -c + 0.5, samples)
        envelope = 1.0 / (_SQRT_PI * (-lower) ** 0.25)
        table_lower = np.array([self.ai(x) for x in lower])
        negative = float(np.max(np.abs(table_lower - self._asymptotic_negative(lower)[0]) / envelope))
        return {"origin": origin, "positive_overlap": positive, "negative_overlap": negative}

    # ------------------------------------------------------------------ zeros

    def airy_zero(self, r: int) -> float:
        """
        r-th zero a_r of Ai by Newton iteration from the asymptotic seed

        Raises:
            DomainError: r < 1
            NumericFailure: no convergence within 100 iterations
        """
        if not isinstance(r, (int, np.integer)) or r < 1:
            raise DomainError(f"r must be a positive integer, got {r!r}")
        r = int(r)
        with self._lock:
            if r in self.zero_cache:
                return self.zero_cache[r]

        t = 1.5 * math.pi * (r - 0.25)
        x = -(t ** (2.0 / 3.0)) * (1.0 + 5.0 / (48.0 * t * t))
        step = math.inf
        for iteration in range(100):
            value = self.ai(x)
            slope = self.ai_prime(x)
            step = value / slope
            x -= step
            if abs(step) <= 1e-14 * max(1.0, abs(x)):
                break
        else:
            raise NumericFailure(
                f"Newton iteration for Airy zero {r} did not converge",
                diagnostics={"r": r, "last_step": step, "x": x},
            )

        slope = self.ai_prime(x)
        residual = abs(self.ai(x))
        delta = 1e-8 * max(1.0, abs(x))
        bracketed = self.ai(x - delta) * self.ai(x + delta) < 0.0
        if residual > 1e-13 * max(1.0, abs(slope) * abs(x)) or not bracketed:
            raise NumericFailure(
                f"Airy zero {r} failed verification",
                diagnostics={"r": r, "x": x, "residual": residual, "bracketed": bracketed},
            )
        logger.debug(f"Airy zero a_{r} = {x:.15f} after {iteration + 1} Newton steps")

        with self._lock:
            self.zero_cache.setdefault(r, x)
            return self.zero_cache[r]

    def airy_zeros(self, r_max: int) -> np.ndarray:
        """a_1..a_{r_max}"""
        return np.array([self.airy_zero(r) for r in range(1, r_max + 1)])


@functools.lru_cache(maxsize=1)
def default_evaluator() -> AiryEvaluator:
    """Shared evaluator configured from settings"""
    return AiryEvaluator(
        series_cutoff=settings.airy_series_cutoff,
        asymptotic_terms=settings.airy_asymptotic_terms,
        node_spacing=settings.airy_node_spacing,
        taylor_terms=settings.airy_taylor_terms,
    )


def ai(x: ArrayLike) -> ArrayLike:
    return default_evaluator().ai(x)


def ai_prime(x: ArrayLike) -> ArrayLike:
    return default_evaluator().ai_prime(x)


def airy_zero(r: int) -> float:
    return default_evaluator().airy_zero(r)
