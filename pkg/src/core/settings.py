"""
Environment settings.

Everything here can be overridden with PHOTOTAXIS_* environment
variables or a local .env file.
"""

from functools import lru_cache
from pathlib import Path
from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-wide settings (not part of any experiment config)."""

    model_config = SettingsConfigDict(
        env_prefix="PHOTOTAXIS_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    workers: Optional[int] = Field(default=None, ge=1)
    db_path: Optional[Path] = None
    log_level: str = "WARNING"
    record_runs: bool = True

    def resolved_db_path(self) -> Path:
        """Registry path, defaulting to ~/.phototaxis/runs.db."""
        db_path = self.db_path or Path.home() / ".phototaxis" / "runs.db"
        db_path.parent.mkdir(parents=True, exist_ok=True)
        return db_path

    def resolved_workers(self, override: Optional[int] = None) -> int:
        """CLI flag beats environment beats the serial default."""
        if override is not None:
            return max(1, override)
        return self.workers or 1


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings()
