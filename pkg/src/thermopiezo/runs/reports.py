"""Run artifacts: YAML reports, the trajectory CSV and invariant verdicts."""

import logging
import math
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np
import pandas as pd
import yaml

from thermopiezo.config.constants import (
    BALANCE_REL_TOL,
    CSV_COLUMNS,
    ENVELOPE_SLACK,
    FLOAT_DIGITS,
)
from thermopiezo.errors import ConfigParseError

logger = logging.getLogger(__name__)

# Columns that are legitimately empty for some controllers
OPTIONAL_COLUMNS = ("E_hybrid", "L_h")


class ReportDumper(yaml.SafeDumper):
    """SafeDumper writing floats with 17 significant digits."""


def _represent_float(dumper: yaml.SafeDumper, value: float) -> yaml.ScalarNode:
    if math.isnan(value):
        text = ".nan"
    elif math.isinf(value):
        text = ".inf" if value > 0 else "-.inf"
    else:
        text = f"{value:.{FLOAT_DIGITS}g}"
        mantissa, _, exponent = text.partition("e")
        if "." not in mantissa:
            mantissa += ".0"
        text = f"{mantissa}e{exponent}" if exponent else mantissa
    return dumper.represent_scalar("tag:yaml.org,2002:float", text)


ReportDumper.add_representer(float, _represent_float)


def to_plain(obj: Any) -> Any:
    """Convert numpy scalars, arrays and tuples to plain YAML-safe values."""
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def dump_yaml(data: dict) -> str:
    return yaml.dump(to_plain(data), Dumper=ReportDumper, sort_keys=False,
                     default_flow_style=False)


def write_yaml(data: dict, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_yaml(data))
    logger.debug(f"Wrote {path}")
    return path


def read_yaml(path: Union[str, Path]) -> dict:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except OSError as e:
        raise ConfigParseError(f"Cannot read {path}: {e.strerror}") from e
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        raise ConfigParseError(f"Invalid YAML in {path}", mark.line + 1 if mark else None) from e
    if not isinstance(data, dict):
        raise ConfigParseError(f"{path} does not hold a mapping")
    return data


def write_trajectory(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    """CSV in the fixed column order; missing values are written as empty fields."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame[list(CSV_COLUMNS)].to_csv(
        path, index=False, float_format=f"%.{FLOAT_DIGITS}g", na_rep=""
    )
    logger.debug(f"Wrote {len(frame)} samples to {path}")
    return path


def read_trajectory(path: Union[str, Path]) -> pd.DataFrame:
    path = Path(path)
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ConfigParseError(f"Cannot read trajectory {path}: {e}") from e
    missing = [c for c in CSV_COLUMNS if c not in frame.columns]
    if missing:
        raise ConfigParseError(f"Trajectory {path} lacks columns {missing}")
    return frame


def energy_column(frame: pd.DataFrame) -> str:
    """E_hybrid when it is populated, else E_h."""
    return "E_hybrid" if frame["E_hybrid"].notna().any() else "E_h"


def evaluate_invariants(
    frame: pd.DataFrame,
    envelope: Optional[tuple[float, float]] = None,
    column: Optional[str] = None,
    balance_tol: float = BALANCE_REL_TOL,
) -> dict[str, Optional[bool]]:
    """
    Pass/fail verdicts computed from a trajectory frame alone.

    Args:
        frame: Time series with the CSV columns.
        envelope: (prefactor, sigma) of the certified envelope, if any.
        column: Energy column to test; E_hybrid if populated, else E_h.
        balance_tol: Relative bound on the per-step balance residual.

    Returns:
        monotone_energy, balance_residual, envelope (None when not
        applicable) and finite.
    """
    column = column or energy_column(frame)
    energy = frame[column].to_numpy(dtype=float)
    times = frame["t"].to_numpy(dtype=float)
    scale = max(float(energy[0]) if len(energy) else 0.0, 1.0)

    finite = True
    for name in CSV_COLUMNS:
        values = frame[name].to_numpy(dtype=float)
        if name in OPTIONAL_COLUMNS and np.all(np.isnan(values)):
            continue
        finite = finite and bool(np.all(np.isfinite(values)))

    increments = np.diff(energy)
    monotone = bool(np.all(increments <= balance_tol * scale))
    residual = frame["dissipation_residual"].to_numpy(dtype=float)
    balanced = bool(np.all(np.abs(residual) <= balance_tol * scale))

    envelope_ok: Optional[bool] = None
    if envelope is not None:
        prefactor, sigma = envelope
        bound = prefactor * energy[0] * np.exp(-sigma * times)
        envelope_ok = bool(np.all(energy <= bound + ENVELOPE_SLACK))

    verdicts = {
        "monotone_energy": monotone,
        "balance_residual": balanced,
        "envelope": envelope_ok,
        "finite": finite,
    }
    logger.debug(f"Invariant verdicts on {column}: {verdicts}")
    return verdicts


def verdicts_passed(verdicts: dict[str, Optional[bool]]) -> bool:
    return all(v for v in verdicts.values() if v is not None)
