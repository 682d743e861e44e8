"""
Settings for farplan

Tunables come from (highest precedence first) explicit constructor/CLI values,
FARPLAN_* environment variables or a .env file, the YAML file named by
FARPLAN_CONFIG (default config/farplan.yaml), and the defaults below.
"""

import os
from functools import lru_cache
from typing import List, Literal, Tuple, Type

from pydantic import Field, field_validator
from pydantic_settings import (
    BaseSettings,
    PydanticBaseSettingsSource,
    SettingsConfigDict,
    YamlConfigSettingsSource,
)

DEFAULT_ALPHA_GRID = [round(1.0 - i / 10, 1) for i in range(11)]


def _config_file() -> str:
    return os.getenv("FARPLAN_CONFIG", os.path.join("config", "farplan.yaml"))


class Settings(BaseSettings):
    """Runtime configuration"""

    model_config = SettingsConfigDict(
        env_prefix="FARPLAN_",
        env_file=".env",
        extra="ignore",
    )

    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"
    default_platform: str = "B"
    migration_overhead_s: float = Field(5e-6, ge=0.0)

    alpha_grid: List[float] = Field(default_factory=lambda: list(DEFAULT_ALPHA_GRID))
    conflict_passes: int = Field(1, ge=1)

    oracle_max_ops: int = Field(12, ge=1)
    oracle_max_tensors: int = Field(40, ge=1)
    oracle_check_instances: int = Field(200, ge=1)
    oracle_check_max_ops: int = Field(10, ge=1)

    offload_threshold: float = Field(1.0, ge=1.0)
    offload_overhead_cap: float = Field(0.10, gt=0.0, le=1.0)

    @field_validator("alpha_grid")
    @classmethod
    def _grid_in_unit_interval(cls, grid: List[float]) -> List[float]:
        for alpha in grid:
            if not 0.0 <= alpha <= 1.0:
                raise ValueError(f"alpha {alpha} outside [0, 1]")
        return grid

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: Type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> Tuple[PydanticBaseSettingsSource, ...]:
        yaml_settings = YamlConfigSettingsSource(settings_cls, yaml_file=_config_file())
        return (init_settings, env_settings, dotenv_settings, yaml_settings)


@lru_cache
def get_settings() -> Settings:
    """Cached settings instance"""
    return Settings()
