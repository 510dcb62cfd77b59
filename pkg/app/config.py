from __future__ import annotations

from typing import Optional

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    database_url: str = "sqlite:///./systolic_reports.db"
    service_token: Optional[str] = None
    default_level: int = 0
    max_level: int = 6
    verdict_slack: float = 0.05
    stability_tolerance: float = 1e-3
    steiner_points: int = 2
    realization_max_attempts: int = 64
    optimizer_budget: int = 10_000
    optimizer_scale: float = 0.05
    optimizer_scale_decay: float = 0.999
    optimizer_min_scale: float = 1e-3
    optimizer_epsilon: float = 1e-3
    optimizer_temperature: Optional[float] = 0.01
    optimizer_certify_levels: int = 1
    optimizer_strict_floors: bool = True
    certify_steiner_points: int = 7
    optimizer_seed: int = 0
    batch_workers: int = 4
    log_level: str = "INFO"
    version: str = "0.0.0"
    git_sha: str = "unknown"
    report_version: int = 1

    model_config = SettingsConfigDict(env_prefix="", case_sensitive=False)


settings = Settings()
