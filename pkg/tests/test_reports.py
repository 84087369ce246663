"""Tests for run artifacts and invariant verdicts."""

import math
from pathlib import Path

import numpy as np
import pandas as pd
import pytest
import yaml

from thermopiezo.config.constants import CSV_COLUMNS
from thermopiezo.errors import ConfigParseError
from thermopiezo.runs.reports import (
    dump_yaml,
    energy_column,
    evaluate_invariants,
    read_trajectory,
    read_yaml,
    verdicts_passed,
    write_trajectory,
    write_yaml,
)


def _frame(energy, hybrid=None, residual=0.0) -> pd.DataFrame:
    n = len(energy)
    return pd.DataFrame(
        {
            "t": np.linspace(0.0, 1.0, n),
            "E_h": energy,
            "E_hybrid": hybrid if hybrid is not None else [np.nan] * n,
            "L_h": [np.nan] * n,
            "w1_end": np.zeros(n),
            "w2_end": np.zeros(n),
            "q_norm": np.zeros(n),
            "dissipation_residual": np.full(n, residual),
        }
    )[list(CSV_COLUMNS)]


class TestYamlReports:
    """Test suite for YAML report writing."""

    @pytest.mark.parametrize("value", [0.1, 1.0 / 3.0, 1e20, 2.5e-300, 1.0, -7.0])
    def test_floats_read_back_exactly(self, value: float):
        """Test that 17 significant digits restore the same double."""
        assert yaml.safe_load(dump_yaml({"x": value}))["x"] == value

    def test_special_floats(self):
        """Test that nan and infinities are written as YAML specials."""
        data = yaml.safe_load(dump_yaml({"a": math.nan, "b": math.inf, "c": -math.inf}))

        assert math.isnan(data["a"])
        assert data["b"] == math.inf
        assert data["c"] == -math.inf

    def test_numpy_values(self):
        """Test that arrays and numpy scalars become plain values."""
        text = dump_yaml({"P": np.eye(2), "ok": np.bool_(True), "n": np.int64(3)})

        assert yaml.safe_load(text) == {"P": [[1.0, 0.0], [0.0, 1.0]], "ok": True, "n": 3}

    def test_key_order_kept(self):
        """Test that sections keep insertion order."""
        text = dump_yaml({"subcommand": "simulate", "config": {}, "verdicts": {}})

        assert text.splitlines()[0].startswith("subcommand")

    def test_write_and_read(self, tmp_path: Path):
        """Test a report file on disk."""
        path = write_yaml({"sigma": 1.0 / 12.0}, tmp_path / "out" / "report.yaml")

        assert read_yaml(path) == {"sigma": 1.0 / 12.0}

    def test_read_non_mapping(self, tmp_path):
        """Test that a report must be a mapping."""
        path = tmp_path / "report.yaml"
        path.write_text("- 1\n")

        with pytest.raises(ConfigParseError):
            read_yaml(path)


class TestTrajectoryCsv:
    """Test suite for trajectory.csv."""

    def test_empty_columns_stay_empty(self, tmp_path):
        """Test that missing hybrid values are written as empty fields."""
        path = write_trajectory(_frame([1.0, 0.5, 0.25]), tmp_path / "trajectory.csv")
        header, first = path.read_text().splitlines()[:2]

        assert header == ",".join(CSV_COLUMNS)
        assert first.split(",")[2] == ""

    def test_values_read_back(self, tmp_path):
        """Test that energies survive the CSV exactly."""
        frame = _frame([1.0 / 3.0, 0.1, 1e-17])
        loaded = read_trajectory(write_trajectory(frame, tmp_path / "trajectory.csv"))

        np.testing.assert_array_equal(loaded["E_h"].to_numpy(), frame["E_h"].to_numpy())
        assert loaded["E_hybrid"].isna().all()

    def test_missing_columns(self, tmp_path):
        """Test that a foreign CSV is rejected."""
        path = tmp_path / "trajectory.csv"
        path.write_text("t,E\n0,1\n")

        with pytest.raises(ConfigParseError, match="lacks columns"):
            read_trajectory(path)


class TestEvaluateInvariants:
    """Test suite for evaluate_invariants."""

    def test_decaying_run_passes(self):
        """Test that a monotone, balanced, finite run passes everything."""
        verdicts = evaluate_invariants(_frame(np.exp(-np.linspace(0.0, 1.0, 11))))

        assert verdicts == {
            "monotone_energy": True,
            "balance_residual": True,
            "envelope": None,
            "finite": True,
        }
        assert verdicts_passed(verdicts)

    def test_energy_increase_fails(self):
        """Test that a growing energy fails monotonicity."""
        verdicts = evaluate_invariants(_frame([1.0, 1.1, 1.2]))

        assert not verdicts["monotone_energy"]
        assert not verdicts_passed(verdicts)

    def test_corrupted_residual_fails(self):
        """Test that a large balance residual is caught."""
        verdicts = evaluate_invariants(_frame([1.0, 0.9, 0.8], residual=1e-6))

        assert not verdicts["balance_residual"]

    def test_nan_fails_finite(self):
        """Test that a NaN in a required column fails the finite check."""
        verdicts = evaluate_invariants(_frame([1.0, np.nan, 0.8]))

        assert not verdicts["finite"]

    def test_hybrid_column_preferred(self):
        """Test that E_hybrid is judged when populated."""
        frame = _frame([1.0, 0.5, 0.2], hybrid=[1.0, 1.2, 1.3])

        assert energy_column(frame) == "E_hybrid"
        assert not evaluate_invariants(frame)["monotone_energy"]

    def test_envelope(self):
        """Test the envelope verdict against 3 exp(-t/12) E(0)."""
        frame = _frame(np.exp(-np.linspace(0.0, 1.0, 11)))

        assert evaluate_invariants(frame, envelope=(3.0, 1.0 / 12.0))["envelope"] is True
        assert evaluate_invariants(frame, envelope=(1.0, 5.0))["envelope"] is False
