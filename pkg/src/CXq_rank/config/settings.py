"""Typed application settings using pydantic-settings."""

from __future__ import annotations

from pathlib import Path

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

try:
    from pydantic_settings import TomlConfigSettingsSource

    _HAS_TOML = True
except ImportError:
    _HAS_TOML = False


class StorageSettings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="STORAGE_")

    runs_root: Path = Field(default=Path("runs"), description="Parent directory of run directories")
    sessions_filename: str = Field(default="sessions.tsv")
    bias_params_filename: str = Field(default="bias_params.tsv")
    trace_filename: str = Field(default="em_trace.tsv")
    report_filename: str = Field(default="eval_report.tsv")
    checkpoint_filename: str = Field(default="model.ckpt")


class AppSettings(BaseSettings):
    """Top-level settings composing all sub-settings."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_nested_delimiter="__",
        toml_file="config.toml",
    )

    storage: StorageSettings = Field(default_factory=StorageSettings)
    log_level: str = Field(default="INFO")
    log_json: bool = Field(default=False, description="One JSON object per log line")

    @classmethod
    def settings_customise_sources(cls, settings_cls, **kwargs):  # type: ignore[override]
        sources = (
            kwargs["env_settings"],
            kwargs["dotenv_settings"],
        )
        if _HAS_TOML:
            sources += (TomlConfigSettingsSource(settings_cls),)
        sources += (kwargs["init_settings"],)
        return sources
