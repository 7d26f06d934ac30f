import os
from dotenv import load_dotenv
from dataclasses import dataclass
from functools import lru_cache

load_dotenv()


def _parse_int(value: str | None, default: int) -> int:
    if value is None or not value.strip():
        return default
    try:
        return int(value.strip())
    except ValueError:
        return default


def _parse_float(value: str | None, default: float) -> float:
    if value is None or not value.strip():
        return default
    try:
        return float(value.strip())
    except ValueError:
        return default


@dataclass(frozen=True)
class Settings:
    # generic
    ENV: str
    LOG_LEVEL: str
    APP_VERSION: str

    # reproducibility / execution
    SEED: int
    JOBS: int
    OUTPUT_DIR: str

    # power flow defaults
    PF_TOL: float
    PF_MAX_ITER: int

    # solver defaults
    SOLVER_TOL: float
    SOLVER_MAX_ITER: int


@lru_cache()
def get_settings() -> Settings:
    return Settings(
        ENV=os.getenv("ENV", "dev"),
        LOG_LEVEL=os.getenv("LOG_LEVEL", "INFO").upper(),
        APP_VERSION="0.1.0",

        # GRIDVOLTERRA_SEED is the seed fallback when neither flags nor config set one
        SEED=_parse_int(os.getenv("GRIDVOLTERRA_SEED"), 0),
        JOBS=max(1, _parse_int(os.getenv("GRIDVOLTERRA_JOBS"), 1)),
        OUTPUT_DIR=os.getenv("GRIDVOLTERRA_OUTPUT_DIR", "out"),

        PF_TOL=_parse_float(os.getenv("GRIDVOLTERRA_PF_TOL"), 1e-10),
        PF_MAX_ITER=_parse_int(os.getenv("GRIDVOLTERRA_PF_MAX_ITER"), 200),

        SOLVER_TOL=_parse_float(os.getenv("GRIDVOLTERRA_SOLVER_TOL"), 1e-8),
        SOLVER_MAX_ITER=_parse_int(os.getenv("GRIDVOLTERRA_SOLVER_MAX_ITER"), 20000),
    )
