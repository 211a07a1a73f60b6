from typing import Optional
from pydantic_settings import BaseSettings
from pydantic import validator
import logging


class Settings(BaseSettings):
    # Parallel execution
    workers: Optional[int] = None
    joblib_backend: str = "loky"

    # Logging
    log_level: str = "INFO"
    log_format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    # Sampler defaults
    default_samples: int = 1024
    default_thin: int = 1
    adapt_interval: int = 500
    beta_init: float = 0.1

    # Diagnostics defaults
    max_lag: int = 200

    project_name: str = "bayesqst"

    @validator("workers")
    def validate_workers(cls, v):
        if v is not None and v < 1:
            raise ValueError("QST_WORKERS must be at least 1")
        return v

    @validator("log_level")
    def validate_log_level(cls, v):
        level = v.upper()
        if not isinstance(logging.getLevelName(level), int):
            raise ValueError(f"Unknown log level: {v}")
        return level

    @validator("joblib_backend")
    def validate_backend(cls, v):
        if v not in ("loky", "multiprocessing", "threading", "sequential"):
            raise ValueError(f"Unsupported joblib backend: {v}")
        return v

    @validator("beta_init")
    def validate_beta_init(cls, v):
        if not 0 < v <= 1:
            raise ValueError("QST_BETA_INIT must lie in (0, 1]")
        return v

    class Config:
        env_prefix = "QST_"
        env_file = ".env"
        case_sensitive = False
        extra = "ignore"


def get_settings() -> Settings:
    """Build settings from the current environment."""
    return Settings()
