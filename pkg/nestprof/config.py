# nestprof/config.py
from functools import lru_cache
from typing import Optional

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    app_name: str = "nestprof"
    version: str = "1.0.0"

    # mining defaults, CLI flags win over these
    default_threshold: float = 0.99
    default_max_lhs: int = 3
    default_threads: int = 1

    # metadata budget, unset means unlimited
    max_mem_mb: Optional[int] = None
    bytes_per_entry: int = 96
    budget_check_interval: int = 256

    log_level: str = "WARNING"
    log_format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    model_config = SettingsConfigDict(env_prefix="NESTPROF_", env_file=".env", extra="ignore")


@lru_cache()
def get_settings() -> Settings:
    return Settings()
