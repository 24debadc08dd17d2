import os

import pytest
from hypothesis import HealthCheck, settings

from init_db import create_db_and_tables, get_engine

settings.register_profile("dev", deadline=None, suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much])
settings.register_profile("ci", max_examples=300, deadline=None, suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much])
settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "dev"))


@pytest.fixture
def engine(tmp_path):
    """A fresh results database in the test's temporary directory."""
    return create_db_and_tables(get_engine(str(tmp_path / "runs.db")))


@pytest.fixture
def config_file(tmp_path, monkeypatch):
    """Writes a settings file, points LOEBARENA_CONFIG at it and returns its path."""

    def write(text: str):
        path = tmp_path / "config.yml"
        path.write_text(text, encoding="utf-8")
        monkeypatch.setenv("LOEBARENA_CONFIG", str(path))
        return path

    return write
