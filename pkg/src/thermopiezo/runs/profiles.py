"""Initial profiles built from the [initial] config section."""

import logging
from functools import partial
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from thermopiezo.config.settings import InitialSection, ProfileSection
from thermopiezo.discretization.initial import InitialProfiles, Profile, zero_profile
from thermopiezo.errors import ConfigValidationError
from thermopiezo.model.material import MaterialParams

logger = logging.getLogger(__name__)

PROFILE_FIELDS = ("z0", "v0x", "p0x", "v1", "p1")


def sine_profile(x: np.ndarray, amplitude: float, mode: int, length: float) -> np.ndarray:
    return amplitude * np.sin(mode * np.pi * np.asarray(x, dtype=float) / length)


def gaussian_profile(x: np.ndarray, amplitude: float, center: float, width: float) -> np.ndarray:
    r = (np.asarray(x, dtype=float) - center) / width
    return amplitude * np.exp(-0.5 * r**2)


def tabulated_profile(x: np.ndarray, xs: np.ndarray, values: np.ndarray) -> np.ndarray:
    return np.interp(np.asarray(x, dtype=float), xs, values)


def closed_form_profile(section: ProfileSection, length: float) -> Profile:
    if section.kind == "sine":
        return partial(sine_profile, amplitude=section.amplitude, mode=section.mode,
                       length=length)
    if section.kind == "gaussian":
        return partial(gaussian_profile, amplitude=section.amplitude, center=section.center,
                       width=section.width)
    return zero_profile


def read_tabulated(path: Path) -> pd.DataFrame:
    """
    Load tabulated samples: an x column plus any of z0, v0x, p0x, v1, p1.

    Raises:
        ConfigValidationError: Unreadable file, no x column or unsorted x.
    """
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ConfigValidationError(f"Cannot read tabulated initial data {path}: {e}") from e
    if "x" not in frame.columns:
        raise ConfigValidationError(f"Tabulated initial data {path} needs an 'x' column")
    unknown = sorted(set(frame.columns) - {"x", *PROFILE_FIELDS})
    if unknown:
        raise ConfigValidationError(f"Unknown columns in {path}: {', '.join(unknown)}")
    if not frame["x"].is_monotonic_increasing:
        raise ConfigValidationError(f"Column x in {path} must be increasing")
    return frame


def profiles_from_config(
    section: InitialSection, p: MaterialParams, base_dir: Optional[Path] = None
) -> InitialProfiles:
    """Rod profiles scale with l1, beam profiles with l2; tabulated columns take precedence."""
    lengths = {"z0": p.l1, "v0x": p.l2, "p0x": p.l2, "v1": p.l2, "p1": p.l2}
    chosen: dict[str, Profile] = {
        name: closed_form_profile(getattr(section, name), lengths[name])
        for name in PROFILE_FIELDS
    }

    if section.tabulated:
        path = Path(section.tabulated)
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        frame = read_tabulated(path)
        xs = frame["x"].to_numpy(dtype=float)
        for name in PROFILE_FIELDS:
            if name in frame.columns:
                chosen[name] = partial(tabulated_profile, xs=xs,
                                       values=frame[name].to_numpy(dtype=float))
        logger.info(f"Tabulated initial data from {path}: "
                    f"{[c for c in frame.columns if c != 'x']}")

    return InitialProfiles(**chosen)
