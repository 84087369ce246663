"""Tests for YAML run configs and environment settings."""

from pathlib import Path

import pytest
import yaml

from thermopiezo.config.settings import AppSettings, load_config, parse_config
from thermopiezo.controllers.feedback import ControllerKind, HybridFeedback
from thermopiezo.discretization.state import InterfaceClosure
from thermopiezo.errors import (
    ConfigParseError,
    ConfigValidationError,
    NTooSmall,
    ParameterValidationError,
    UnknownKeyError,
)


def _config(material: dict, **sections) -> str:
    return yaml.safe_dump({"material": material, **sections})


class TestParseConfig:
    """Test suite for parse_config."""

    def test_minimal_config_defaults(self, canonical_dict):
        """Test that a material-only config gets the documented defaults."""
        cfg = parse_config(_config(canonical_dict))

        assert cfg.grid.N == 40
        assert cfg.grid.closure == InterfaceClosure.BALANCED
        assert cfg.time.dt == "auto"
        assert cfg.time.T == 10.0
        assert cfg.controller.kind == ControllerKind.STATIC
        assert cfg.lyapunov.b1 == 1.0
        assert cfg.initial.z0.kind == "sine"
        assert cfg.initial.p1.kind == "zero"

    def test_effective_config_dict(self, canonical_dict):
        """Test that to_dict includes defaults in plain types."""
        data = parse_config(_config(canonical_dict)).to_dict()

        assert data["controller"]["kind"] == "static"
        assert data["grid"]["closure"] == "balanced"
        assert data["material"]["alpha1"] == 4.0

    def test_zero_gain_rejected(self, canonical_dict):
        """Test that xi1 = 0 fails validation."""
        with pytest.raises(ConfigValidationError):
            parse_config(_config(canonical_dict, controller={"kind": "static", "xi1": 0.0}))

    def test_unknown_key_path(self, canonical_dict):
        """Test that a misspelled key reports its dotted path."""
        with pytest.raises(UnknownKeyError) as info:
            parse_config(_config(canonical_dict, controller={"xi3": 1.0}))

        assert info.value.key == "controller.xi3"

    def test_unknown_section(self, canonical_dict):
        """Test that an unknown top-level section is rejected."""
        with pytest.raises(UnknownKeyError, match="solver"):
            parse_config(_config(canonical_dict, solver={"tol": 1.0}))

    def test_yaml_error_line(self):
        """Test that malformed YAML reports the offending line."""
        with pytest.raises(ConfigParseError) as info:
            parse_config("material:\n  rho: 1.0\n  mu: [1.0\n")

        assert info.value.line is not None
        assert info.value.line >= 3

    def test_non_mapping(self):
        """Test that a YAML list is not a config."""
        with pytest.raises(ConfigParseError):
            parse_config("- 1\n- 2\n")

    def test_missing_material(self, canonical_dict):
        """Test that every missing parameter is reported at once."""
        del canonical_dict["kappa"]
        del canonical_dict["l2"]

        with pytest.raises(ParameterValidationError) as info:
            parse_config(_config(canonical_dict))

        assert {v.name for v in info.value.violations} == {"kappa", "l2"}

    def test_too_few_nodes(self, canonical_dict):
        """Test that N = 1 is rejected."""
        with pytest.raises(NTooSmall):
            parse_config(_config(canonical_dict, grid={"N": 1}))

    def test_negative_dt(self, canonical_dict):
        """Test that dt <= 0 fails validation."""
        with pytest.raises(ConfigValidationError, match="time.dt"):
            parse_config(_config(canonical_dict, time={"dt": -0.1}))

    def test_hybrid_needs_matrices(self, canonical_dict):
        """Test that a hybrid controller without b is rejected."""
        with pytest.raises(ConfigValidationError, match="b"):
            parse_config(_config(canonical_dict, controller={"kind": "hybrid", "A": [[-1.0]],
                                                             "c": [1.0]}))

    def test_hybrid_zeta_defaults_to_zero(self, canonical_dict):
        """Test that a hybrid controller starts at q = 0 unless zeta is given."""
        cfg = parse_config(_config(canonical_dict, controller={
            "kind": "hybrid", "A": [[-1.0]], "b": [1.0], "c": [1.0], "d": 0.0, "Gamma": 0.0,
        }))
        ctrl = cfg.controller.build()

        assert isinstance(ctrl, HybridFeedback)
        assert ctrl.zeta.tolist() == [0.0]


class TestLoadConfig:
    """Test suite for load_config."""

    def test_reads_file(self, canonical_dict, tmp_path: Path):
        """Test loading a config from disk."""
        path = tmp_path / "run.yaml"
        path.write_text(_config(canonical_dict, grid={"N": 12}))

        assert load_config(path).grid.N == 12

    def test_missing_file(self, tmp_path):
        """Test that an unreadable path is a parse error."""
        with pytest.raises(ConfigParseError):
            load_config(tmp_path / "absent.yaml")


class TestAppSettings:
    """Test suite for environment settings."""

    def test_defaults(self, monkeypatch):
        """Test the built-in defaults."""
        monkeypatch.delenv("THERMOPIEZO__LOG_LEVEL", raising=False)
        settings = AppSettings(_env_file=None)

        assert settings.log_level == "INFO"
        assert settings.output_root == "runs"

    def test_environment_override(self, monkeypatch):
        """Test that THERMOPIEZO__* variables override defaults."""
        monkeypatch.setenv("THERMOPIEZO__LOG_LEVEL", "DEBUG")
        monkeypatch.setenv("THERMOPIEZO__WORKERS", "3")
        settings = AppSettings(_env_file=None)

        assert settings.log_level == "DEBUG"
        assert settings.workers == 3
