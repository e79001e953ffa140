from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    # Worker threads for table builds and Monte Carlo blocks
    # Results never depend on this value
    workers: int = 1

    # Logging
    log_level: str = "INFO"

    # Spectral path defaults (n=1, N <= 16)
    k_max: int = 200
    lambda_max: float = 200.0
    lambda_step: float = 0.02

    # Monte Carlo defaults
    samples: int = 100_000
    reps: int = 5
    seed: int = 0

    class Config:
        env_prefix = "HDISC_"
        env_file = ".env"
        env_file_encoding = "utf-8"


settings = Settings()
