"""Lyapunov functional L = E + delta (F1 + F2 + F3) on discrete states."""

from typing import NamedTuple

import numpy as np

from thermopiezo.discretization.energy import field_energy, rod_weights
from thermopiezo.discretization.grid import Grid, midpoint_average
from thermopiezo.discretization.state import DiscreteState, InterfaceClosure
from thermopiezo.errors import DeltaOutOfRange
from thermopiezo.model.lyapunov import LyapunovConstants
from thermopiezo.model.material import MaterialParams

SANDWICH_ROUNDOFF = 1e-12


class LyapunovValue(NamedTuple):
    L: float
    F1: float
    F2: float
    F3: float
    E: float


class SandwichResult(NamedTuple):
    passed: bool
    lower_margin: float  # L - (1 - M delta) E
    upper_margin: float  # (1 + M delta) E - L


def _check_delta(consts: LyapunovConstants, delta: float) -> None:
    upper = 1.0 / consts.Mconst
    if not (0.0 <= delta < upper):
        raise DeltaOutOfRange(delta, upper)


def lyapunov_functional(
    s: DiscreteState,
    p: MaterialParams,
    g: Grid,
    consts: LyapunovConstants,
    delta: float,
    closure: InterfaceClosure = InterfaceClosure.BALANCED,
    storage: float = 0.0,
) -> LyapunovValue:
    """
    Evaluate the multiplier terms with the same quadratures as the energy.

    Args:
        s: Discrete state.
        p: Material parameters.
        g: Grid.
        consts: Lyapunov constants (a1, b1, c1, M).
        delta: Multiplier weight, 0 <= delta < 1/M.
        closure: Joint closure, selects the rod quadrature.
        storage: Controller storage q^T P q / 2 added to E for hybrid runs.

    Returns:
        (L, F1, F2, F3, E).
    """
    _check_delta(consts, delta)

    x_mid = g.beam_midpoints
    u1, u2 = midpoint_average(s.u1), midpoint_average(s.u2)
    w1, w2 = midpoint_average(s.w1), midpoint_average(s.w2)

    F1 = consts.a1 * g.h2 * float(np.sum(x_mid * (p.rho * u1 * w1 + p.mu * u2 * w2)))
    density = (
        p.alpha * u1**2
        + p.beta * u2**2
        - p.coupling * u1 * u2
        + p.rho * w1**2
        + p.mu * w2**2
    )
    F2 = consts.b1 * g.h2 * float(np.sum((p.l2 - x_mid) * density))
    F3 = consts.c1 * float(rod_weights(g, closure) @ s.z**2)

    E = field_energy(s, p, g, closure) + storage
    L = E + delta * (F1 + F2 + F3)
    return LyapunovValue(L=L, F1=F1, F2=F2, F3=F3, E=E)


def sandwich_check(
    s: DiscreteState,
    p: MaterialParams,
    g: Grid,
    consts: LyapunovConstants,
    delta: float,
    closure: InterfaceClosure = InterfaceClosure.BALANCED,
) -> SandwichResult:
    """(1 - M delta) E <= L <= (1 + M delta) E at a single state."""
    value = lyapunov_functional(s, p, g, consts, delta, closure)
    m_delta = consts.Mconst * delta
    lower = value.L - (1.0 - m_delta) * value.E
    upper = (1.0 + m_delta) * value.E - value.L
    slack = SANDWICH_ROUNDOFF * max(value.E, 1e-300)
    return SandwichResult(
        passed=lower >= -slack and upper >= -slack,
        lower_margin=lower,
        upper_margin=upper,
    )
