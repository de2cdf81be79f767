# app/domain/settings.py

"""
Process-wide tunables for the EVaR toolkit.

Values come from the environment (``EVAR_`` prefix) or a ``.env`` file and are
read once; ``get_settings()`` hands out the cached instance.
"""

from typing import Optional

from dotenv import load_dotenv
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

load_dotenv()

_settings: Optional["Settings"] = None


class Settings(BaseSettings):
    """Numerical defaults shared by the model, risk, optimization and estimation layers."""
    exponent_cap: float = Field(700.0, gt=0.0)
    tail_mass: float = Field(1e-10, gt=0.0, lt=1.0)
    max_terms: int = Field(64, ge=1)
    s_min: float = Field(1e-8, gt=0.0)
    s_max: float = Field(1e6, gt=0.0)
    kkt_tolerance: float = Field(1e-6, gt=0.0)
    els_starts: int = Field(16, ge=1)
    els_max_evaluations: int = Field(20000, ge=100)
    jobs: int = Field(0, ge=0)
    log_level: str = "INFO"

    model_config = SettingsConfigDict(env_prefix="EVAR_", extra="ignore")


def get_settings() -> Settings:
    """
    Returns the lazily built settings singleton.

    Returns:
        Settings: The process settings.
    """
    global _settings
    if _settings is None:
        _settings = Settings()
    return _settings


def reset_settings() -> None:
    """Drops the cached settings so the next call re-reads the environment."""
    global _settings
    _settings = None
