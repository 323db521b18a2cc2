"""
Runtime settings
Read from SOP_* environment variables or a local .env file
"""
from functools import lru_cache
from typing import Optional

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="SOP_", env_file=".env", extra="ignore")

    log_level: str = "INFO"
    workers: Optional[int] = None
    mc_block_size: int = 100_000
    mc_samples: int = 1_000_000
    seed: int = 20240601
    tol: float = 1e-12
    series_cap: int = 200


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings()
