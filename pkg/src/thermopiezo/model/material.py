"""Material parameters of the rod-beam transmission line and derived matrices."""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Mapping

import numpy as np

from thermopiezo.config.constants import MATERIAL_PARAMETERS
from thermopiezo.errors import (
    ConfigError,
    MissingParameter,
    NonPositiveParameter,
    ParameterValidationError,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MaterialParams:
    """Physical constants of the heat rod (kappa, l1) and the beam (the rest)."""

    rho: float  # mass density
    mu: float  # magnetic permeability
    alpha1: float  # elastic stiffness
    beta: float  # impermeability
    gamma: float  # piezoelectric constant, may be zero
    kappa: float  # thermal diffusivity
    l1: float  # rod length
    l2: float  # beam length

    @property
    def alpha(self) -> float:
        """Piezoelectrically stiffened coefficient alpha1 + gamma^2 beta."""
        return self.alpha1 + self.gamma**2 * self.beta

    @property
    def coupling(self) -> float:
        """Off-diagonal stiffness magnitude gamma * beta."""
        return self.gamma * self.beta

    def to_dict(self) -> dict[str, float]:
        """Convert to dictionary for reports."""
        return asdict(self)


@dataclass(frozen=True)
class DerivedMatrices:
    """Mass matrix M2 = diag(rho, mu) and stiffness matrix A2."""

    M2: np.ndarray
    A2: np.ndarray

    @property
    def det_A2(self) -> float:
        return float(self.A2[0, 0] * self.A2[1, 1] - self.A2[0, 1] * self.A2[1, 0])


def derive_matrices(p: MaterialParams) -> DerivedMatrices:
    """Build M2 and A2 with alpha = alpha1 + gamma^2 beta substituted."""
    M2 = np.diag([p.rho, p.mu])
    A2 = np.array(
        [
            [p.alpha, -p.coupling],
            [-p.coupling, p.beta],
        ]
    )
    return DerivedMatrices(M2=M2, A2=A2)


def wave_speeds(p: MaterialParams) -> np.ndarray:
    """Characteristic speeds of the beam: sqrt of the eigenvalues of M2^-1 A2."""
    mats = derive_matrices(p)
    # M2^-1/2 A2 M2^-1/2 is symmetric with the same spectrum
    scale = 1.0 / np.sqrt(np.diag(mats.M2))
    sym = mats.A2 * np.outer(scale, scale)
    return np.sqrt(np.linalg.eigvalsh(sym))


def validate_params(raw: Mapping[str, Any]) -> MaterialParams:
    """
    Turn a raw key-value map into typed material parameters.

    Every violation is collected before raising, so a config with several
    problems reports all of them at once.

    Args:
        raw: Mapping with the eight material keys.

    Returns:
        Validated MaterialParams.

    Raises:
        ParameterValidationError: Wraps the list of MissingParameter and
            NonPositiveParameter violations.
    """
    violations: list[ConfigError] = []
    values: dict[str, float] = {}

    for name in MATERIAL_PARAMETERS:
        if name not in raw or raw[name] is None:
            violations.append(MissingParameter(name))
            continue
        try:
            value = float(raw[name])
        except (TypeError, ValueError):
            violations.append(NonPositiveParameter(name, raw[name]))
            continue
        if not math.isfinite(value):
            violations.append(NonPositiveParameter(name, value))
        elif name == "gamma":
            if value < 0:
                violations.append(NonPositiveParameter(name, value))
        elif value <= 0:
            violations.append(NonPositiveParameter(name, value))
        values[name] = value

    if violations:
        for v in violations:
            logger.debug(f"Parameter violation: {v}")
        raise ParameterValidationError(violations)

    return MaterialParams(**values)
