"""Boundary feedback laws acting at the free end of the beam."""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Union

import numpy as np

from thermopiezo.errors import AssumptionsFailed, ConfigValidationError, DimensionMismatch

logger = logging.getLogger(__name__)


class ControllerKind(str, Enum):
    OPEN_LOOP = "open_loop"
    STATIC = "static"
    SCALAR = "scalar"
    HYBRID = "hybrid"


@dataclass(frozen=True)
class OpenLoop:
    """No actuation: g1 = g2 = 0."""

    kind: ControllerKind = field(default=ControllerKind.OPEN_LOOP, init=False)

    @property
    def n(self) -> int:
        return 0

    def to_dict(self) -> dict:
        return {"kind": self.kind.value}


@dataclass(frozen=True)
class StaticFeedback:
    """Collocated damping of the velocity and current traces."""

    xi1: float
    xi2: float
    kind: ControllerKind = field(default=ControllerKind.STATIC, init=False)

    def __post_init__(self) -> None:
        if self.xi1 <= 0 or self.xi2 <= 0:
            raise ConfigValidationError(
                f"Static gains must be strictly positive, got xi1={self.xi1}, xi2={self.xi2}"
            )

    @property
    def n(self) -> int:
        return 0

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "xi1": self.xi1, "xi2": self.xi2}


@dataclass(frozen=True)
class ScalarDynamic:
    """First-order charge controller: p' = -p + xi2 w2_end, g2 = -p."""

    xi2: float
    eta: float = 0.0  # initial charge
    xi1: float = 1.0
    kind: ControllerKind = field(default=ControllerKind.SCALAR, init=False)

    def __post_init__(self) -> None:
        if self.xi1 <= 0 or self.xi2 <= 0:
            raise ConfigValidationError(
                f"Scalar controller gains must be positive, got xi1={self.xi1}, xi2={self.xi2}"
            )

    @property
    def n(self) -> int:
        return 1

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "xi1": self.xi1, "xi2": self.xi2, "eta": self.eta}


@dataclass(frozen=True, eq=False)
class HybridFeedback:
    """
    Static mechanical damping plus a dynamic electrical controller
    q' = A q + b w2_end driving g2 = -c^T q - d w2_end.
    """

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: float
    gamma: float  # required positive-real margin
    zeta: np.ndarray  # q(0)
    xi1: float = 1.0
    kind: ControllerKind = field(default=ControllerKind.HYBRID, init=False)

    def __post_init__(self) -> None:
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float)).ravel()
        c = np.atleast_1d(np.asarray(self.c, dtype=float)).ravel()
        zeta = np.atleast_1d(np.asarray(self.zeta, dtype=float)).ravel()
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionMismatch(f"Controller matrix A must be square, got {A.shape}")
        for name, vec in (("b", b), ("c", c), ("zeta", zeta)):
            if vec.shape != (n,):
                raise DimensionMismatch(f"Controller vector {name} has length {len(vec)}, need {n}")
        if self.xi1 <= 0:
            raise ConfigValidationError(f"xi1 must be positive, got {self.xi1}")
        if self.gamma < 0:
            raise ConfigValidationError(f"Gamma must be non-negative, got {self.gamma}")
        if self.d < self.gamma:
            raise AssumptionsFailed(f"Hybrid controller needs d >= Gamma, got d={self.d}, "
                                    f"Gamma={self.gamma}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "zeta", zeta)

    @property
    def n(self) -> int:
        return int(self.A.shape[0])

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "A": self.A.tolist(),
            "b": self.b.tolist(),
            "c": self.c.tolist(),
            "d": self.d,
            "Gamma": self.gamma,
            "zeta": self.zeta.tolist(),
            "xi1": self.xi1,
        }


ControllerSpec = Union[OpenLoop, StaticFeedback, ScalarDynamic, HybridFeedback]


@dataclass(frozen=True, eq=False)
class BoundaryLaw:
    """Every controller in the common form g1 = -xi1 w1, g2 = -c^T q - d w2, q' = A q + b w2."""

    xi1: float
    d: float
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray

    @property
    def n(self) -> int:
        return len(self.b)


def scalar_to_hybrid(s: ScalarDynamic) -> HybridFeedback:
    """Rewrite the scalar controller as a one-state hybrid controller."""
    return HybridFeedback(
        A=np.array([[-1.0]]),
        b=np.array([s.xi2]),
        c=np.array([1.0]),
        d=0.0,
        gamma=0.0,
        zeta=np.array([s.eta]),
        xi1=s.xi1,
    )


def boundary_law(ctrl: ControllerSpec) -> BoundaryLaw:
    """Common linear form used by the assembler and the dissipation form."""
    empty_A = np.zeros((0, 0))
    empty = np.zeros(0)
    if isinstance(ctrl, OpenLoop):
        return BoundaryLaw(xi1=0.0, d=0.0, A=empty_A, b=empty, c=empty)
    if isinstance(ctrl, StaticFeedback):
        return BoundaryLaw(xi1=ctrl.xi1, d=ctrl.xi2, A=empty_A, b=empty, c=empty)
    if isinstance(ctrl, ScalarDynamic):
        ctrl = scalar_to_hybrid(ctrl)
    return BoundaryLaw(xi1=ctrl.xi1, d=ctrl.d, A=ctrl.A, b=ctrl.b, c=ctrl.c)


def initial_controller_state(ctrl: ControllerSpec) -> np.ndarray:
    if isinstance(ctrl, HybridFeedback):
        return ctrl.zeta.copy()
    if isinstance(ctrl, ScalarDynamic):
        return np.array([ctrl.eta])
    return np.zeros(0)


def _check_q(ctrl: ControllerSpec, q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float).ravel()
    if len(q) != ctrl.n:
        raise DimensionMismatch(f"Controller state has length {len(q)}, expected {ctrl.n}")
    return q


def boundary_force(
    ctrl: ControllerSpec, w1_end: float, w2_end: float, q: np.ndarray
) -> tuple[float, float]:
    """
    Traction (g1, g2) applied at x = l2.

    Args:
        ctrl: Active controller.
        w1_end: Velocity trace w1(l2).
        w2_end: Current trace w2(l2).
        q: Controller state, empty for OpenLoop and Static.

    Returns:
        Boundary force pair.

    Raises:
        DimensionMismatch: If q does not match the controller dimension.
    """
    q = _check_q(ctrl, q)
    if isinstance(ctrl, OpenLoop):
        return 0.0, 0.0
    if isinstance(ctrl, StaticFeedback):
        return -ctrl.xi1 * w1_end, -ctrl.xi2 * w2_end
    if isinstance(ctrl, ScalarDynamic):
        return -ctrl.xi1 * w1_end, -float(q[0])
    return -ctrl.xi1 * w1_end, -float(ctrl.c @ q) - ctrl.d * w2_end


def controller_rhs(
    ctrl: Union[ScalarDynamic, HybridFeedback], q: np.ndarray, w2_end: float
) -> np.ndarray:
    """Right-hand side of the controller ODE."""
    if not isinstance(ctrl, (ScalarDynamic, HybridFeedback)):
        raise DimensionMismatch(f"{ctrl.kind.value} controller has no internal state")
    q = _check_q(ctrl, q)
    if isinstance(ctrl, ScalarDynamic):
        return -q + ctrl.xi2 * w2_end
    return ctrl.A @ q + ctrl.b * w2_end
