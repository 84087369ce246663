"""Closed-form Lyapunov constants, admissible multiplier ranges and decay rates."""

import logging
import math
from dataclasses import asdict, dataclass, replace
from typing import NamedTuple, Optional

from thermopiezo.config.constants import DEFAULT_B1, DELTA_SAFETY_FACTOR
from thermopiezo.errors import DeltaOutOfRange
from thermopiezo.model.material import MaterialParams

logger = logging.getLogger(__name__)


class DecayRate(NamedTuple):
    sigma: float
    prefactor: float


class MaxDecayRate(NamedTuple):
    sigma_max: float
    delta_star: float
    attainable: bool


@dataclass(frozen=True)
class LyapunovConstants:
    """
    Weights of the Lyapunov functional and the constants of its
    equivalence with the energy.

    delta_max starts at 1/M and is tightened by the feedback gains
    (see with_static_gains). sigma is the rate at the default delta.
    """

    b1: float
    a1: float
    c1: float
    Mtilde: float
    Mconst: float
    delta_max: float
    sigma: float

    @property
    def delta_star(self) -> float:
        """Rate-maximizing multiplier 1/(2M)."""
        return 1.0 / (2.0 * self.Mconst)

    @property
    def default_delta(self) -> float:
        """1/(2M) when admissible, else just inside the admissible range."""
        return min(self.delta_star, DELTA_SAFETY_FACTOR * self.delta_max)

    def with_static_gains(self, p: MaterialParams, xi1: float, xi2: float) -> "LyapunovConstants":
        """Tighten delta_max for static gains and re-evaluate sigma at the default delta."""
        delta_max = admissible_delta_static(self, p, xi1, xi2)
        tightened = replace(self, delta_max=delta_max)
        sigma = _rate(tightened, p, tightened.default_delta) if delta_max > 0 else 0.0
        return replace(tightened, sigma=sigma)

    def with_delta_max(self, p: MaterialParams, delta_max: float) -> "LyapunovConstants":
        """Same as with_static_gains for an externally computed bound."""
        tightened = replace(self, delta_max=min(delta_max, 1.0 / self.Mconst))
        sigma = _rate(tightened, p, tightened.default_delta) if delta_max > 0 else 0.0
        return replace(tightened, sigma=sigma)

    def to_dict(self) -> dict[str, float]:
        """Convert to dictionary for reports."""
        data = asdict(self)
        data["delta_star"] = self.delta_star
        return data


def _branch_max(p: MaterialParams) -> float:
    """max(sqrt(a1/rho) + g^2 sqrt(beta mu)/rho, 2 sqrt(beta/mu)); ties are harmless."""
    elastic = math.sqrt(p.alpha1 / p.rho) + p.gamma**2 * math.sqrt(p.beta * p.mu) / p.rho
    magnetic = 2.0 * math.sqrt(p.beta / p.mu)
    return max(elastic, magnetic)


def _equivalence_max(p: MaterialParams) -> float:
    shared = math.sqrt(p.mu * p.gamma**2 / p.alpha1)
    return max(
        math.sqrt(p.rho / p.alpha1) + shared,
        math.sqrt(p.mu / p.beta) + shared,
        2.0,
        p.alpha / p.alpha1 + p.gamma**2 * p.beta / (2.0 * p.alpha1),
    )


def compute_lyapunov_constants(p: MaterialParams, b1: float = DEFAULT_B1) -> LyapunovConstants:
    """
    Evaluate a1, c1, M~ and M = b1 l2 M~.

    Args:
        p: Validated material parameters.
        b1: Free multiplier weight, strictly positive.

    Returns:
        Constants with delta_max = 1/M and sigma at delta* = 1/(2M).
    """
    if b1 <= 0:
        raise ValueError(f"b1 must be positive, got {b1}")

    heat = p.l2 * p.kappa / p.l1**2
    branch = _branch_max(p)

    a1 = 2.0 * b1 * (4.0 * heat + branch)
    c1 = b1 * p.l2
    Mtilde = (8.0 * heat + 2.0 * branch) * _equivalence_max(p)
    Mconst = b1 * p.l2 * Mtilde

    consts = LyapunovConstants(
        b1=b1,
        a1=a1,
        c1=c1,
        Mtilde=Mtilde,
        Mconst=Mconst,
        delta_max=1.0 / Mconst,
        sigma=0.0,
    )
    consts = replace(consts, sigma=_rate(consts, p, consts.delta_star))
    logger.debug(f"Lyapunov constants: a1={a1:.6g}, M~={Mtilde:.6g}, M={Mconst:.6g}")
    return consts


def admissible_delta_static(
    c: LyapunovConstants, p: MaterialParams, xi1: float, xi2: float
) -> float:
    """Upper bound on delta under static feedback; admissible delta lies strictly below it."""
    if xi1 <= 0 or xi2 <= 0:
        raise ValueError(f"Static gains must be positive, got xi1={xi1}, xi2={xi2}")

    scale = c.a1 * p.l2
    velocity_branch = 2.0 * xi1 / (scale * (p.rho + 2.0 * xi1**2 / p.alpha1))
    current_branch = 2.0 * xi2 / (
        scale * (p.mu + xi2**2 * (p.alpha + p.gamma**2 * p.beta) / (p.alpha1 * p.beta))
    )
    return min(1.0 / c.Mconst, velocity_branch, current_branch)


def _rate(c: LyapunovConstants, p: MaterialParams, delta: float) -> float:
    return delta * (1.0 - c.Mconst * delta) * 8.0 * c.b1 * p.l2 * p.kappa / p.l1**2


def decay_rate(c: LyapunovConstants, p: MaterialParams, delta: float) -> DecayRate:
    """
    Decay rate sigma and envelope prefactor (1+M delta)/(1-M delta).

    Raises:
        DeltaOutOfRange: Unless 0 < delta < c.delta_max.
    """
    if not (0.0 < delta < c.delta_max):
        raise DeltaOutOfRange(delta, c.delta_max)
    prefactor = (1.0 + c.Mconst * delta) / (1.0 - c.Mconst * delta)
    return DecayRate(sigma=_rate(c, p, delta), prefactor=prefactor)


def max_decay_rate(
    c: LyapunovConstants,
    p: MaterialParams,
    xi1: Optional[float] = None,
    xi2: Optional[float] = None,
) -> MaxDecayRate:
    """
    Largest certified rate 2 b1 l2 kappa / (l1^2 M), reached at delta* = 1/(2M).

    attainable reports whether delta* lies below the gain-dependent bound
    (c.delta_max when no gains are given).
    """
    delta_star = c.delta_star
    sigma_max = 2.0 * c.b1 * p.l2 * p.kappa / (p.l1**2 * c.Mconst)
    if xi1 is not None and xi2 is not None:
        bound = admissible_delta_static(c, p, xi1, xi2)
    else:
        bound = c.delta_max
    return MaxDecayRate(sigma_max=sigma_max, delta_star=delta_star, attainable=delta_star < bound)
