"""Sampling of initial data onto the grid."""

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from thermopiezo.controllers.feedback import initial_controller_state
from thermopiezo.discretization.assembly import SemiDiscreteSystem, consistent_state
from thermopiezo.discretization.grid import Grid
from thermopiezo.discretization.state import DiscreteState

logger = logging.getLogger(__name__)

Profile = Callable[[np.ndarray], np.ndarray]


def zero_profile(x: np.ndarray) -> np.ndarray:
    return np.zeros_like(x, dtype=float)


@dataclass(frozen=True)
class InitialProfiles:
    """
    Closed-form initial data.

    z0 is evaluated at the distance from the joint, y in [0, l1]; the beam
    profiles at x in [0, l2]. v0x and p0x are the initial strains, v1 and p1
    the initial velocities.
    """

    z0: Profile = zero_profile
    v0x: Profile = zero_profile
    p0x: Profile = zero_profile
    v1: Profile = zero_profile
    p1: Profile = zero_profile


def apply_initial_conditions(
    profiles: InitialProfiles, grid: Grid, system: SemiDiscreteSystem
) -> DiscreteState:
    """
    Sample the profiles at the nodes and project onto the algebraic rows.

    Only boundary nodes change during projection (w2_0, u_{N+1}, and u1_0
    under the strong closure). The joint temperature is set to w1_0 and the
    controller starts at zeta.

    Raises:
        ConstraintProjectionFailed: If the boundary block is singular.
    """
    y = grid.rod_nodes
    x = grid.beam_nodes
    state = DiscreteState(
        z=np.asarray(profiles.z0(y), dtype=float),
        u1=np.asarray(profiles.v0x(x), dtype=float),
        u2=np.asarray(profiles.p0x(x), dtype=float),
        w1=np.asarray(profiles.v1(x), dtype=float),
        w2=np.asarray(profiles.p1(x), dtype=float),
        q=initial_controller_state(system.controller),
        t=0.0,
    )
    sampled = state.copy()
    projected = consistent_state(system, state)

    moved = {
        "z_0": sampled.z[0] - projected.z[0],
        "z_end": sampled.z[-1],
        "w2_0": sampled.w2[0] - projected.w2[0],
        "u1_end": sampled.u1[-1] - projected.u1[-1],
        "u2_end": sampled.u2[-1] - projected.u2[-1],
        "u1_0": sampled.u1[0] - projected.u1[0],
    }
    changed = {k: float(v) for k, v in moved.items() if v != 0.0}
    if changed:
        logger.info(f"Initial data projected onto boundary constraints: {changed}")
    return projected
