from typing import Optional
from pydantic import Field
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """Numerical and runtime settings loaded from environment variables (prefix ``BIVIRUS_``)"""

    # Logging Configuration
    log_level: str = Field(default="INFO", description="DEBUG, INFO, WARNING, ERROR, CRITICAL")
    log_file: Optional[str] = Field(default=None, description="Optional log file path")
    log_json_format: bool = Field(default=False, description="Emit one JSON object per record")
    log_console_output: bool = Field(default=True, description="Log to stderr")

    # Concurrency
    max_workers: int = Field(default=4, ge=1, description="Thread pool size for seed searches and census runs")

    # Domain D membership
    domain_tol: float = Field(default=1e-9, ge=0, description="Drift clamped silently by the integrator")
    domain_hard_tol: float = Field(default=1e-7, ge=0, description="Drift beyond which integration aborts")

    # Integrator
    rtol: float = Field(default=1e-8, gt=0)
    atol: float = Field(default=1e-10, gt=0)
    first_step: float = Field(default=1e-3, gt=0)
    t_max: float = Field(default=200.0, gt=0)
    eps_field: float = Field(default=1e-8, gt=0, description="Field-norm convergence threshold")
    convergence_window: int = Field(default=10, ge=1, description="Trailing accepted steps below eps_field")
    eps_plateau: float = Field(default=1e-5, gt=0, description="Field norm below which a Newton capture is tried")
    capture_tol: float = Field(default=1e-5, gt=0, description="Window states within this of the polished limit")

    # Spectral
    zero_band: float = Field(default=1e-8, ge=0, description="|s| below this is reported as zero / neutral")
    simplicity_gap: float = Field(default=1e-6, ge=0)
    consistency_tol: float = Field(default=1e-8, ge=0)

    # Equilibria
    fixed_point_damping: float = Field(default=0.5, gt=0, le=1)
    fixed_point_clamp: float = Field(default=1e-12, gt=0)
    fixed_point_max_iter: int = Field(default=20000, ge=1)
    newton_switch: float = Field(default=1e-3, gt=0, description="Residual below which Newton takes over")
    newton_max_iter: int = Field(default=100, ge=1)
    residual_tol: float = Field(default=1e-12, gt=0)
    record_residual_max: float = Field(default=1e-10, gt=0)
    zero_snap: float = Field(default=1e-6, gt=0, description="Virus components below this are snapped to zero")
    dedup_tol: float = Field(default=1e-6, gt=0)
    match_tol: float = Field(default=1e-5, gt=0)
    det_threshold: float = Field(default=1e-10, gt=0)
    random_boundary_seeds: int = Field(default=10, ge=0)
    random_coexistence_seeds: int = Field(default=50, ge=0)
    enumeration_budget: int = Field(default=600, ge=1, description="Maximum solver runs per enumeration")

    model_config = {
        "env_file": ".env",
        "env_prefix": "BIVIRUS_",
        "case_sensitive": False,
        "extra": "ignore",
    }


# Global settings instance
settings = Settings()
