"""
Application settings and configuration management.
"""

from functools import lru_cache
from typing import Optional
from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic import Field


class Settings(BaseSettings):
    """Settings loaded from DSL_* environment variables or a .env file."""

    model_config = SettingsConfigDict(
        env_prefix="DSL_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )

    # Application
    log_level: str = Field("WARNING", description="Log level for stderr diagnostics")
    threads: int = Field(4, ge=1, description="Worker cap for parallel sections")
    seed: int = Field(20240101, description="Default random seed")
    pipeline_timeout_seconds: int = Field(900, description="Timeout for a single pipeline run")

    # Symbol core
    max_factor: int = Field(2**63, description="Largest integer accepted by factorize")
    max_candidates: int = Field(4096, description="Cap on candidate generators in the generating-set search")
    max_combinations: int = Field(2_000_000, description="Cap on candidate d-subsets examined")

    # Boundary search
    boundary_tol: float = Field(1e-9, description="Tolerance on Re Phi at boundary points")
    gradient_tol: float = Field(1e-8, description="Tolerance on the gradient norm at boundary points")
    dedup_radius: float = Field(1e-4, description="Angular deduplication radius")
    rank_tol: float = Field(1e-6, description="Relative eigenvalue threshold for the boundary index")
    expansion_tol: float = Field(1e-6, description="Tolerance on linear expansion coefficients")
    grid_small: int = Field(64, description="Seed grid points per axis for d <= 3")
    grid_large: int = Field(16, description="Seed grid points per axis for 4 <= d <= 6")
    max_boundary_dim: int = Field(6, description="Largest torus dimension searched")
    max_boundary_seeds: int = Field(64, description="Number of lowest grid minima polished")

    # Carleson
    samples: int = Field(1_000_000, description="Samples per (tau, eps) cell")
    chunk_size: int = Field(65_536, description="Samples per deterministic chunk")
    eps_max: float = Field(0.2, description="Largest box side")
    eps_min: float = Field(0.0125, description="Smallest box side")
    stratify_share: float = Field(0.5, description="Share of samples placed near boundary points")
    stratify_radius_factor: float = Field(10.0, description="Ball radius factor times sqrt(eps)")
    evidence_margin: float = Field(0.1, description="Minimum half-width of the evidence band")
    sampler: str = Field("lattice", description="lattice or random")

    # Taylor lab
    keylemma_tol: float = Field(1e-10, description="Residual tolerance in binary64 mode")

    # Flat constructor
    exact_max_n: int = Field(8, description="Largest N solved in exact rational arithmetic")
    certify_grid: int = Field(4096, description="Certification grid points per dimension")
    certify_max_points: int = Field(2**24, description="Total certification grid budget")

    # Approximation numbers
    nu0: float = Field(8.0, description="Default nu for lattice witnesses")
    newton_maxiter: int = Field(50, description="Newton iteration cap")
    newton_tol: float = Field(1e-12, description="Newton residual target")
    witness_tol: float = Field(1e-10, description="Accepted witness residual")
    probe_m: int = Field(256, description="Default probe column cap")
    probe_d: int = Field(24, description="Default probe total degree")
    probe_window_lo: int = Field(10, description="Probe fit window start")
    probe_window_hi: int = Field(60, description="Probe fit window end")
    probe_mass_threshold: float = Field(0.99, description="Probe truncation mass threshold")

    output_dir: Optional[str] = Field(None, description="Default directory for reports")


@lru_cache()
def get_settings() -> Settings:
    """Get cached application settings."""
    return Settings()


# Global settings instance
settings = get_settings()
