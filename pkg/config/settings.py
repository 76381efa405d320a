"""
Configuration settings for the fault-tolerant synthesis toolkit.
"""
from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings loaded from environment variables (prefix QLFT_)."""

    model_config = SettingsConfigDict(
        env_prefix="QLFT_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore"
    )

    # Runtime
    threads: int = Field(4, ge=1, description="Caps parallel restarts and Monte Carlo chunks")
    log_level: str = "INFO"
    log_file: Optional[str] = None
    output_dir: str = "output"
    pipeline_config: str = "config/pipeline.yaml"

    # Structural checks
    structural_rtol: float = 1e-9
    rank_rtol: float = 1e-10

    # Certification
    eig_rtol: float = 1e-8
    audit_slack: float = 10.0

    # Rank-constrained solver
    max_iters: int = 5000
    restarts: int = 32
    seed: int = 0
    converge_tol: float = 1e-9
    equality_tol: float = 1e-6  # relative equality residual an accepted Z must meet
    rank_tol: float = 1e-6  # sigma_{r+1} / sigma_1 an accepted Z must meet
    strict_scale: float = 1e-6  # eps_strict = strict_scale * (1 + ||A_bar||)
    warm_start_iters: int = 400

    # Gamma search
    gamma_ceiling: float = 1e4
    bisect_iters: int = 8

    # Simulation
    dt: float = 1e-3
    horizon: float = 20.0
    mc_trials: int = 10000
    mc_dt: float = 2e-3
    mc_chunk: int = 500


# Singleton instance
settings = Settings()
