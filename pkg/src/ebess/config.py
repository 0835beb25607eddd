"""Tool configuration for the ebess planner.

Configuration is loaded from .ebess.yml in the working directory. Scenario
content lives in scenario files (see :mod:`ebess.scenario`); this file only
holds run-time settings.
"""

from __future__ import annotations

import os
from pathlib import Path

import yaml
from pydantic import BaseModel, Field, field_validator

CONFIG_FILENAME = ".ebess.yml"


class TelemetryConfig(BaseModel):
    """Telemetry and logging configuration."""

    enabled: bool = True
    log_path: str = ".ebess/telemetry.jsonl"


class BatchConfig(BaseModel):
    """Multi-scenario report runs."""

    max_parallel: int = 4

    @field_validator("max_parallel")
    @classmethod
    def validate_max_parallel(cls, v: int) -> int:
        if v < 1:
            raise ValueError(f"Invalid max_parallel: {v}. Must be >= 1")
        return v


class PlannerConfig(BaseModel):
    """Complete planner configuration."""

    scenario_dir: str | None = None
    telemetry: TelemetryConfig = Field(default_factory=TelemetryConfig)
    batch: BatchConfig = Field(default_factory=BatchConfig)

    @classmethod
    def load_from_file(cls, config_path: Path | str) -> PlannerConfig:
        """Load configuration from YAML file."""
        config_path = Path(config_path)
        if not config_path.exists():
            raise FileNotFoundError(f"Config file not found: {config_path}")

        with open(config_path, encoding="utf-8") as f:
            data = yaml.safe_load(f)

        return cls(**(data or {}))

    @classmethod
    def load_from_dir(cls, base_dir: Path | str) -> PlannerConfig:
        """Load configuration from a directory's .ebess.yml."""
        config_path = Path(base_dir) / CONFIG_FILENAME

        if not config_path.exists():
            return cls()

        return cls.load_from_file(config_path)

    def apply_env_overrides(self) -> None:
        """Apply environment variable overrides to configuration."""
        if scenario_dir := os.getenv("EBESS_SCENARIO_DIR"):
            self.scenario_dir = scenario_dir

        if log_path := os.getenv("EBESS_TELEMETRY_PATH"):
            self.telemetry.log_path = log_path
        if os.getenv("EBESS_TELEMETRY_DISABLED") == "1":
            self.telemetry.enabled = False

        if v := os.getenv("EBESS_MAX_PARALLEL"):
            self.batch = BatchConfig(max_parallel=int(v))


def load_config(base_dir: Path | str = ".") -> PlannerConfig:
    """
    Load planner configuration.

    Args:
        base_dir: Directory that may contain .ebess.yml

    Returns:
        Loaded and validated configuration with environment overrides applied
    """
    config = PlannerConfig.load_from_dir(base_dir)
    config.apply_env_overrides()
    return config
