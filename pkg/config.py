"""Run defaults loaded from ``other_files/config.yml``.

The YAML file is validated into SQLModel (pydantic) settings models so that
typos and wrong types are reported as ``ConfigError`` before anything runs.

Environment:
  LOEBARENA_CONFIG   alternative path to the YAML file
  LOEBARENA_THREADS  caps the worker count of parallel sections
"""

from __future__ import annotations

import logging
import os
from functools import lru_cache
from pathlib import Path

import yaml
from pydantic import ValidationError
from sqlmodel import Field, SQLModel
from yaml.loader import SafeLoader

from errors import ConfigError

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parent / "other_files" / "config.yml"
CHARSETS = ("printable_ascii", "python_printable")


class DatabaseSettings(SQLModel):
    sqlite_file_name: str = "loeb_arena.db"
    echo: bool = False


class EvaluationSettings(SQLModel):
    max_rank: int = Field(default=10_000, ge=1)


class ProofSearchSettings(SQLModel):
    charset: str = "printable_ascii"
    max_candidates: int = Field(default=1_000_000, ge=1)
    taut_atom_cap: int = Field(default=16, ge=1)


class DynamicsSettings(SQLModel):
    payoff_shift: float = 3.0
    mutation: float = Field(default=0.0, ge=0.0, le=1.0)


class PayoffSettings(SQLModel):
    actions: list[str] = Field(default_factory=lambda: ["C", "D", "E"])
    rows: dict[str, list[float]] = Field(
        default_factory=lambda: {"C": [2, 0, -2], "D": [3, 1, -1], "E": [4, 2, 0]}
    )


class LoggingSettings(SQLModel):
    level: str = "WARNING"


class Settings(SQLModel):
    """All run defaults. Every section falls back to its built-in values."""

    database: DatabaseSettings = Field(default_factory=DatabaseSettings)
    evaluation: EvaluationSettings = Field(default_factory=EvaluationSettings)
    proof_search: ProofSearchSettings = Field(default_factory=ProofSearchSettings)
    dynamics: DynamicsSettings = Field(default_factory=DynamicsSettings)
    payoffs: PayoffSettings = Field(default_factory=PayoffSettings)
    threads: int | None = Field(default=None, ge=1)
    logging: LoggingSettings = Field(default_factory=LoggingSettings)


def _read_yaml(path: Path) -> dict:
    try:
        with open(path, encoding="utf-8") as file:
            data = yaml.load(file, Loader=SafeLoader)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"error parsing config file {path}: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must contain a mapping")
    return data


@lru_cache(maxsize=8)
def _load(path: str, threads_override: str | None) -> Settings:
    data = _read_yaml(Path(path))
    if threads_override is not None:
        try:
            data["threads"] = int(threads_override)
        except ValueError as exc:
            raise ConfigError(f"LOEBARENA_THREADS must be an integer, got {threads_override!r}") from exc
    try:
        settings = Settings.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"invalid config file {path}: {exc}") from exc
    if settings.proof_search.charset not in CHARSETS:
        raise ConfigError(
            f"proof_search.charset must be one of {', '.join(CHARSETS)}, got {settings.proof_search.charset!r}"
        )
    logger.debug("loaded settings from %s", path)
    return settings


def load_settings(path: str | os.PathLike | None = None) -> Settings:
    """Loads and validates the run settings.

    Args:
        path: Explicit YAML path. Defaults to ``LOEBARENA_CONFIG`` and then to
            ``other_files/config.yml`` next to this module.

    Returns:
        Settings: The validated settings, cached per path.

    Raises:
        ConfigError: If the file is missing, malformed or fails validation.
    """
    if path is None:
        path = os.environ.get("LOEBARENA_CONFIG") or DEFAULT_CONFIG_PATH
    return _load(str(path), os.environ.get("LOEBARENA_THREADS"))


def worker_count(settings: Settings | None = None) -> int:
    settings = settings or load_settings()
    if settings.threads is not None:
        return settings.threads
    return os.cpu_count() or 1
