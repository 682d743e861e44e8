"""
Shared pytest fixtures
"""

import os

import pytest

from farplan.config import get_settings
from farplan.core.platform_model import default_platform


@pytest.fixture(autouse=True)
def isolated_settings(tmp_path, monkeypatch):
    """Defaults only: no YAML file, no FARPLAN_* overrides from the caller's shell"""
    for key in list(os.environ):
        if key.startswith("FARPLAN_"):
            monkeypatch.delenv(key, raising=False)
    monkeypatch.setenv("FARPLAN_CONFIG", str(tmp_path / "absent.yaml"))
    monkeypatch.chdir(tmp_path)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def platform_a():
    return default_platform("A")


@pytest.fixture
def platform_b():
    return default_platform("B")


@pytest.fixture
def zero_overhead_b():
    return default_platform("B", migration_overhead_s=0.0)
