"""Application configuration settings."""

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings."""

    model_config = SettingsConfigDict(
        env_file=".env", env_file_encoding="utf-8", env_prefix="BCT_"
    )

    app_name: str = "BCT Lab"
    app_version: str = "0.1.0"
    log_level: str = "INFO"
    log_file: str = ""

    # Numerics
    tolerance: float = 1e-9
    oracle_size_bound: int = 64
    memory_bound_log2: int = 26
    default_delta: str = "0.1"
    default_seed: int = 7
    float_digits: int = 12

    # Runs
    jobs: int = 1
    profiles_dir: str = "profiles"


settings = Settings()
