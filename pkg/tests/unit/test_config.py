"""
Tests for settings resolution
"""

import pytest
from pydantic import ValidationError

from farplan.config import DEFAULT_ALPHA_GRID, Settings, get_settings

pytestmark = pytest.mark.unit


class TestSettings:
    """Defaults, YAML file and environment overrides"""

    def test_defaults(self):
        s = get_settings()
        assert s.default_platform == "B"
        assert s.migration_overhead_s == 5e-6
        assert s.alpha_grid == DEFAULT_ALPHA_GRID
        assert len(s.alpha_grid) == 11
        assert (s.oracle_max_ops, s.oracle_max_tensors) == (12, 40)
        assert s.conflict_passes == 1

    def test_yaml_file(self, tmp_path, monkeypatch):
        """FARPLAN_CONFIG names a YAML defaults file"""
        path = tmp_path / "farplan.yaml"
        path.write_text("default_platform: A\noracle_max_ops: 8\n")
        monkeypatch.setenv("FARPLAN_CONFIG", str(path))
        get_settings.cache_clear()
        s = get_settings()
        assert s.default_platform == "A"
        assert s.oracle_max_ops == 8

    def test_env_beats_yaml(self, tmp_path, monkeypatch):
        path = tmp_path / "farplan.yaml"
        path.write_text("default_platform: A\n")
        monkeypatch.setenv("FARPLAN_CONFIG", str(path))
        monkeypatch.setenv("FARPLAN_DEFAULT_PLATFORM", "B")
        monkeypatch.setenv("FARPLAN_MIGRATION_OVERHEAD_S", "0")
        get_settings.cache_clear()
        s = get_settings()
        assert s.default_platform == "B"
        assert s.migration_overhead_s == 0.0

    def test_alpha_grid_from_env(self, monkeypatch):
        """List fields parse as JSON"""
        monkeypatch.setenv("FARPLAN_ALPHA_GRID", "[1.0, 0.5, 0.0]")
        assert Settings().alpha_grid == [1.0, 0.5, 0.0]

    def test_alpha_grid_range(self):
        with pytest.raises(ValidationError):
            Settings(alpha_grid=[1.5])

    def test_cached(self):
        assert get_settings() is get_settings()
