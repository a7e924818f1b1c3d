from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    # API Settings
    PROJECT_NAME: str = "Weak Cancellation Workbench"
    VERSION: str = "1.0.0"

    # Logging
    LOG_LEVEL: str = "INFO"

    # Depth defaults
    DEFAULT_DEPTH: int = 5
    WITNESS_MAX_DEPTH: int = 12
    DEFAULT_SEED: int = 0
    DENSE_LEAF_LIMIT: int = 2_000_000

    # Numerical tolerances
    FLOAT_TOL: float = 1e-12
    FOURIER_TOL: float = 1e-9

    # Sweep Settings
    SWEEP_INSTANCES: int = 200
    SWEEP_TI_INSTANCES: int = 100
    SWEEP_DELTA_MARTINGALES: int = 20
    SWEEP_DEPTH: int = 8
    SWEEP_MAX_M: int = 5
    SWEEP_MAX_ELL: int = 3
    SWEEP_WORKERS: int = 4
    SWEEP_EMBEDDING_SAMPLES: int = 1000

    # Output Settings
    OUTPUT_DIR: str = "out"

    class Config:
        env_file = ".env"
        case_sensitive = True


settings = Settings()
