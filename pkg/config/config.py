"""
Configuration management for the frozen-ensemble numerics toolkit
"""
from typing import Literal, Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings loaded from environment variables (prefix FREEZE_RMT_)"""

    model_config = SettingsConfigDict(
        env_prefix="FREEZE_RMT_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Parallelism (FREEZE_RMT_THREADS)
    threads: int = 4

    # Polynomial degree cap
    max_degree: int = 500

    # Eigensolver
    eig_max_iterations: int = 30

    # Internal identity tolerances
    tol_identity: float = 1e-9
    tol_inverse: float = 1e-8
    tol_orthogonality: float = 1e-9
    tol_spectrum: float = 1e-8
    # Published constants are only given to 3 digits
    tol_published: float = 1e-3

    # Airy evaluator
    airy_series_cutoff: float = Field(
        default=8.0,
        description="Asymptotic branches beyond +-cutoff; 8 rather than 6 so the tail series reaches 1e-13",
    )
    airy_asymptotic_terms: int = Field(
        default=30,
        description="Upper limit on asymptotic terms, truncated at the smallest term; 12 terms miss 1e-10 near the cutoff",
    )
    airy_node_spacing: float = 0.5
    airy_taylor_terms: int = 48

    # Adaptive Gauss-Kronrod quadrature
    quad_abs_tol: float = 1e-14
    quad_rel_tol: float = 1e-12
    quad_max_panels: int = 4000

    # Metropolis-Hastings defaults
    mh_samples: int = 100_000
    mh_burn_in: int = 10_000
    mh_thinning: int = 10
    mh_target_acceptance: float = 0.3

    # Output
    default_format: Literal["csv", "json"] = "csv"
    config_file: Optional[str] = None

    # Logging
    log_level: str = "INFO"


# Global settings instance
settings = Settings()
