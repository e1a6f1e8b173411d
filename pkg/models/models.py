"""
Pydantic models for the frozen-ensemble numerics toolkit
"""
from pathlib import Path
from typing import Annotated, Any, Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, PlainSerializer, field_validator, model_validator


def _as_float_array(value: Any) -> np.ndarray:
    array = np.array(value, dtype=float)
    array.setflags(write=False)
    return array


# numpy arrays travel as nested lists in JSON
FloatArray = Annotated[
    np.ndarray,
    BeforeValidator(_as_float_array),
    PlainSerializer(lambda array: array.tolist(), return_type=list),
]


class ArrayModel(BaseModel):
    """Immutable record that may hold numpy arrays"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


class PolynomialFamily(ArrayModel):
    """Classical orthogonal polynomial family"""
    kind: Literal["hermite", "laguerre", "jacobi"] = Field(..., description="Family tag")
    alpha: float = Field(default=0.0, description="Laguerre/Jacobi parameter, > -1")
    beta: float = Field(default=0.0, description="Second Jacobi parameter, > -1")

    @model_validator(mode="after")
    def _check_parameters(self) -> "PolynomialFamily":
        if self.kind in ("laguerre", "jacobi") and not self.alpha > -1.0:
            raise ValueError(f"alpha must be > -1 for {self.kind}, got {self.alpha}")
        if self.kind == "jacobi" and not self.beta > -1.0:
            raise ValueError(f"beta must be > -1 for jacobi, got {self.beta}")
        return self

    @classmethod
    def hermite(cls) -> "PolynomialFamily":
        return cls(kind="hermite")

    @classmethod
    def laguerre(cls, alpha: float) -> "PolynomialFamily":
        return cls(kind="laguerre", alpha=alpha)

    @classmethod
    def jacobi(cls, alpha: float, beta: float) -> "PolynomialFamily":
        return cls(kind="jacobi", alpha=alpha, beta=beta)

    def label(self) -> str:
        if self.kind == "hermite":
            return "hermite"
        if self.kind == "laguerre":
            return f"laguerre(alpha={self.alpha:g})"
        return f"jacobi(alpha={self.alpha:g}, beta={self.beta:g})"


class RecurrenceCoefficients(ArrayModel):
    """Orthonormal three-term recurrence coefficients a_0..a_{n-1}, b_1..b_{n-1}"""
    a: FloatArray = Field(..., description="Diagonal coefficients a_0..a_{n-1}")
    b: FloatArray = Field(..., description="Off-diagonal coefficients b_1..b_{n-1}, all positive")

    @model_validator(mode="after")
    def _check_shapes(self) -> "RecurrenceCoefficients":
        if self.a.ndim != 1 or self.b.ndim != 1 or len(self.b) != len(self.a) - 1:
            raise ValueError(f"expected len(b) == len(a) - 1, got {len(self.a)} and {len(self.b)}")
        if np.any(self.b <= 0.0):
            raise ValueError("off-diagonal coefficients must be positive")
        return self

    @property
    def n(self) -> int:
        return len(self.a)

    @property
    def u(self) -> np.ndarray:
        """Monic recurrence coefficients u_n = b_n^2"""
        return self.b ** 2


class ZeroSet(ArrayModel):
    """Zeros of the N-th orthonormal polynomial with quadrature weights"""
    family: PolynomialFamily
    n: int = Field(..., ge=1, description="Degree N")
    zeros: FloatArray = Field(..., description="Zeros z_1 < ... < z_N")
    christoffel: FloatArray = Field(..., description="Christoffel numbers w_i from the recurrence values")
    dual_christoffel: FloatArray = Field(..., description="Dual Christoffel numbers w_i*")
    christoffel_golub_welsch: FloatArray = Field(..., description="Squared first eigenvector components")
    log_christoffel: FloatArray = Field(..., description="log w_i, finite even where w_i underflows")

    @model_validator(mode="after")
    def _check_zeros(self) -> "ZeroSet":
        if self.zeros.shape != (self.n,):
            raise ValueError(f"expected {self.n} zeros, got shape {self.zeros.shape}")
        if self.n > 1 and not np.all(np.diff(self.zeros) > 0.0):
            raise ValueError("zeros must be strictly ascending")
        return self


class DualBasis(ArrayModel):
    """Orthonormal dual polynomials tabulated at the zeros"""
    family: PolynomialFamily
    n: int = Field(..., ge=1)
    values: FloatArray = Field(..., description="values[k, i] = Q~_k(z_{i+1}), k = 0..N-1")
    connection_log_abs: FloatArray = Field(..., description="log |c_i|")
    connection_sign: FloatArray = Field(..., description="sign of c_i in the classical sign convention")
    pi_at_zeros: FloatArray = Field(..., description="pi(z_i)")
    kappa: float = Field(..., gt=0.0, description="kappa_N")

    @property
    def connection(self) -> np.ndarray:
        """c_i = P~_{N-1}(z_i); may overflow to inf for very large N"""
        with np.errstate(over="ignore"):
            return self.connection_sign * np.exp(self.connection_log_abs)

    @property
    def scaled_values(self) -> np.ndarray:
        """Edge normalization Q_k = Q~_k / sqrt(kappa_N), rows of T_N up to sqrt(pi)"""
        return self.values / np.sqrt(self.kappa)


class EnsembleSpec(ArrayModel):
    """Frozen beta-ensemble and its parameters"""
    kind: Literal["hermite", "laguerre", "jacobi-trig", "jacobi"] = Field(..., description="Ensemble")
    n: int = Field(..., ge=1, description="Number of particles N")
    nu: float = Field(default=1.0, description="Laguerre multiplicity nu > 0")
    a: float = Field(default=1.0, description="Jacobi parameter a >= 0")
    b: float = Field(default=1.0, description="Jacobi parameter b > 0")

    @model_validator(mode="after")
    def _check_parameters(self) -> "EnsembleSpec":
        if self.kind == "laguerre" and not self.nu > 0.0:
            raise ValueError(f"nu must be > 0, got {self.nu}")
        if self.kind in ("jacobi-trig", "jacobi"):
            if not self.a >= 0.0:
                raise ValueError(f"a must be >= 0, got {self.a}")
            if not self.b > 0.0:
                raise ValueError(f"b must be > 0, got {self.b}")
        return self

    @property
    def family(self) -> PolynomialFamily:
        if self.kind == "hermite":
            return PolynomialFamily.hermite()
        if self.kind == "laguerre":
            return PolynomialFamily.laguerre(self.nu - 1.0)
        return PolynomialFamily.jacobi(self.a + self.b - 1.0, self.b - 1.0)

    @property
    def is_jacobi(self) -> bool:
        return self.kind in ("jacobi-trig", "jacobi")


class FreezingCovariance(ArrayModel):
    """Frozen covariance data of one ensemble"""
    spec: EnsembleSpec
    s_matrix: FloatArray = Field(..., description="Inverse covariance S_N")
    sigma_matrix: FloatArray = Field(..., description="Covariance Sigma_N")
    eigenvalues: FloatArray = Field(..., description="Analytic eigenvalues lambda_1..lambda_N")
    t_matrix: FloatArray = Field(..., description="Orthogonal eigenvector matrix T_N")
    frozen_positions: FloatArray = Field(..., description="Unit-scale frozen positions (z, r = sqrt(z), or arccos(z)/2)")


class SpectrumReport(ArrayModel):
    """Residuals of the analytic spectrum against the dense solver"""
    max_eigenvalue_error: float = Field(..., description="max relative gap between analytic and dense eigenvalues")
    max_eigvec_residual: float = Field(..., description="max ||S v_k - lambda_k v_k||_inf relative to max lambda")
    inverse_residual: float = Field(..., description="||Sigma S - I||_max")
    analytic_eigenvalues: FloatArray
    dense_eigenvalues: FloatArray


class EdgeProfile(ArrayModel):
    """Tabulated soft-edge profile and its Airy limit"""
    ensemble: Literal["hermite", "laguerre"]
    n: int = Field(..., ge=1)
    r: int = Field(default=1, ge=1)
    side: Literal["upper", "lower"] = "upper"
    grid: FloatArray
    f_n_values: FloatArray
    f_limit_values: FloatArray

    @property
    def sup_error(self) -> float:
        return float(np.max(np.abs(self.f_n_values - self.f_limit_values)))


class EdgeVariance(BaseModel):
    """Soft-edge variance for the r-th largest particle"""
    r: int = Field(..., ge=1)
    value: float = Field(..., description="sigma^2_max,r")
    error: float = Field(..., description="Quadrature error estimate")
    de_value: Optional[float] = Field(default=None, description="Quartic integral form")
    laguerre_value: Optional[float] = Field(default=None, description="Laguerre value (r = 1)")


class DEVarianceReport(BaseModel):
    """Quartic integral form and its normalization identity"""
    r: int = 1
    quartic: float
    ratio_form: float
    l2_integral: float = Field(..., description="int_0^inf Ai(x + a_r)^2 dx")
    ai_prime_squared: float = Field(..., description="Ai'(a_r)^2")


class TrendRow(BaseModel):
    """One row of a scaled-diagonal convergence table"""
    n: int
    value: float
    limit: float
    gap: float


class PlancherelRotachRow(BaseModel):
    """Extreme zero against its Airy asymptote"""
    n: int
    r: int
    lhs: float
    asymptote: float
    residual: float
    scaled_residual: float


class ProfileTrendRow(BaseModel):
    """Sup error of the profile at one N"""
    n: int
    sup_error: float


class SampleBatch(ArrayModel):
    """Metropolis-Hastings draws from a frozen-ensemble density"""
    spec: EnsembleSpec
    beta_like: float = Field(..., gt=0.0)
    t: float = Field(default=1.0, gt=0.0)
    draws: FloatArray = Field(..., description="M x N ordered configurations")
    acceptance_rate: float
    seed: int
    step_size: float = Field(..., description="Adapted proposal scale in statistic units")
    burn_in: int
    thinning: int
    tuning_warning: bool = False


class Moments(ArrayModel):
    """Empirical moments with batch-means standard errors"""
    mean: FloatArray
    covariance: FloatArray
    se: FloatArray = Field(..., description="Standard error of every covariance entry")
    mean_se: FloatArray
    n_batches: int


class CheckResult(BaseModel):
    """Outcome of one verification in check mode"""
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""


class GridSpec(BaseModel):
    """Uniform grid min:max:step"""
    start: float
    stop: float
    step: float = Field(..., gt=0.0)

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid must look like min:max:step, got {text!r}")
        return cls(start=float(parts[0]), stop=float(parts[1]), step=float(parts[2]))

    @model_validator(mode="after")
    def _check_order(self) -> "GridSpec":
        if self.stop < self.start:
            raise ValueError("grid max must not be below grid min")
        return self

    def values(self) -> np.ndarray:
        count = int(np.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return self.start + self.step * np.arange(count)


class RunConfig(BaseModel):
    """Merged configuration of one CLI invocation"""
    command: Literal["zeros", "covariance", "softedge", "profile", "sample", "airy", "check-all"]
    ensemble: Literal["hermite", "laguerre", "jacobi-trig", "jacobi"] = "hermite"
    n_list: List[int] = Field(default_factory=lambda: [4])
    nu: float = 1.0
    a: float = 1.0
    b: float = 1.0
    r: int = Field(default=1, ge=1)
    r_max: int = Field(default=4, ge=1)
    side: Literal["upper", "lower"] = "upper"
    grid: Optional[GridSpec] = None
    t: float = Field(default=1.0, gt=0.0)
    beta: Optional[float] = Field(default=None, gt=0.0, description="beta-like parameter k, kappa")
    samples: Optional[int] = Field(default=None, ge=1)
    burn_in: Optional[int] = Field(default=None, ge=0)
    thinning: Optional[int] = Field(default=None, ge=1)
    chains: int = Field(default=1, ge=1)
    seed: int = 0
    format: Literal["csv", "json"] = "csv"
    out: Optional[Path] = None
    check: bool = False
    include_sampling: bool = False
    tolerances: Dict[str, float] = Field(default_factory=dict)

    @field_validator("n_list")
    @classmethod
    def _check_n_list(cls, value: List[int]) -> List[int]:
        if not value:
            raise ValueError("N list must be nonempty")
        if any(n < 1 for n in value):
            raise ValueError(f"N must be positive, got {value}")
        return value

    @field_validator("grid", mode="before")
    @classmethod
    def _parse_grid(cls, value: Any) -> Any:
        if isinstance(value, str):
            return GridSpec.parse(value)
        return value

    def ensemble_spec(self, n: int) -> EnsembleSpec:
        return EnsembleSpec(kind=self.ensemble, n=n, nu=self.nu, a=self.a, b=self.b)

    def tolerance(self, name: str, default: float) -> float:
        return float(self.tolerances.get(name, default))


class ErrorReport(BaseModel):
    """Error report written to stderr"""
    is_success: bool = Field(default=False, description="Success status (always false for errors)")
    message: str = Field(..., description="Error message describing what went wrong")
    exit_code: int = Field(..., description="Process exit code")
    diagnostics: Dict[str, Any] = Field(default_factory=dict)
