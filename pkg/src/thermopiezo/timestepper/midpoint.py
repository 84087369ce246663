"""
Implicit midpoint integration of E x' = S x.

Differential rows use (E - dt/2 S) x+ = (E + dt/2 S) x; algebraic rows are
imposed at the new time level. For a quadratic energy with dissipation
D(x) this gives E(x+) - E(x) = dt D((x + x+)/2) up to roundoff.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd
from scipy import sparse as sp

from thermopiezo.analysis.functional import lyapunov_functional
from thermopiezo.config.constants import BALANCE_REL_TOL, CONSTRAINT_TOL, CSV_COLUMNS
from thermopiezo.discretization.assembly import SemiDiscreteSystem, factorize
from thermopiezo.discretization.energy import dissipation_matrix, energy_matrix
from thermopiezo.discretization.grid import Grid
from thermopiezo.discretization.state import DiscreteState
from thermopiezo.errors import ConfigValidationError, InconsistentState
from thermopiezo.model.lyapunov import LyapunovConstants
from thermopiezo.model.material import MaterialParams, wave_speeds

logger = logging.getLogger(__name__)


def default_time_step(p: MaterialParams, grid: Grid) -> float:
    """min(h1^2 / (4 kappa), h2 / (4 c_max)) with c_max the fastest beam wave speed."""
    c_max = float(np.max(wave_speeds(p)))
    return min(grid.h1**2 / (4.0 * p.kappa), grid.h2 / (4.0 * c_max))


@dataclass
class SimulationConfig:
    """Everything simulate() needs; P is the controller storage matrix if any."""

    system: SemiDiscreteSystem
    initial: DiscreteState
    dt: float
    T: float
    record_every: int = 1
    P: Optional[np.ndarray] = None
    constants: Optional[LyapunovConstants] = None
    delta: Optional[float] = None
    keep_states: bool = False

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ConfigValidationError(f"dt must be positive, got {self.dt}")
        if self.T < 0 or (0 < self.T < self.dt):
            raise ConfigValidationError(f"T must be 0 or at least dt, got T={self.T}, dt={self.dt}")
        if self.record_every < 1:
            raise ConfigValidationError(f"record_every must be >= 1, got {self.record_every}")


@dataclass
class Trajectory:
    """Sampled diagnostics of one run."""

    times: list[float] = field(default_factory=list)
    E_h: list[float] = field(default_factory=list)
    E_hybrid: list[Optional[float]] = field(default_factory=list)
    L_h: list[Optional[float]] = field(default_factory=list)
    w1_end: list[float] = field(default_factory=list)
    w2_end: list[float] = field(default_factory=list)
    q_norm: list[float] = field(default_factory=list)
    dissipation_residual: list[float] = field(default_factory=list)
    states: list[DiscreteState] = field(default_factory=list)
    controller_kind: str = ""
    dt: float = 0.0
    steps: int = 0
    max_energy_increase: float = 0.0
    max_constraint_residual: float = 0.0

    @property
    def samples(self) -> int:
        return len(self.times)

    @property
    def energy(self) -> np.ndarray:
        """Total energy column: E_hybrid when a controller storage exists, else E_h."""
        if self.E_hybrid and self.E_hybrid[0] is not None:
            return np.asarray(self.E_hybrid, dtype=float)
        return np.asarray(self.E_h, dtype=float)

    def to_frame(self) -> pd.DataFrame:
        """Time series in the fixed CSV column order; missing columns are NaN."""
        frame = pd.DataFrame(
            {
                "t": self.times,
                "E_h": self.E_h,
                "E_hybrid": [np.nan if v is None else v for v in self.E_hybrid],
                "L_h": [np.nan if v is None else v for v in self.L_h],
                "w1_end": self.w1_end,
                "w2_end": self.w2_end,
                "q_norm": self.q_norm,
                "dissipation_residual": self.dissipation_residual,
            }
        )
        return frame[list(CSV_COLUMNS)]


class MidpointStepper:
    """Factorizes the step operator once per (system, dt) and reuses it."""

    def __init__(self, system: SemiDiscreteSystem, dt: float):
        self.system = system
        self.dt = dt
        diff = system.differential_mask.astype(float)
        keep = sp.diags(diff)
        alg = sp.diags(1.0 - diff)
        half = 0.5 * dt
        self._lhs = (keep @ (system.E - half * system.S) + alg @ system.S).tocsc()
        self._rhs = (keep @ (system.E + half * system.S)).tocsr()
        self._lu = factorize(self._lhs, f"midpoint step dt={dt:g}")
        logger.debug(f"Midpoint operator factorized: dim={system.dim}, dt={dt:.3e}")

    def advance(self, x: np.ndarray) -> np.ndarray:
        return self._lu.solve(self._rhs @ x)

    def advance_state(self, state: DiscreteState) -> DiscreteState:
        x = state.to_vector(self.system.layout)
        return DiscreteState.from_vector(self.advance(x), self.system.layout, t=state.t + self.dt)


def step(system: SemiDiscreteSystem, s: DiscreteState, dt: float) -> DiscreteState:
    """One implicit midpoint step; factorizes on every call, use MidpointStepper in loops."""
    return MidpointStepper(system, dt).advance_state(s)


def dissipation_residual(
    x_n: np.ndarray,
    x_next: np.ndarray,
    system: SemiDiscreteSystem,
    dt: float,
    P: Optional[np.ndarray] = None,
) -> float:
    """E(x_{n+1}) - E(x_n) - dt D(x_{n+1/2}) with E including the controller storage."""
    H = energy_matrix(system, P)
    G = dissipation_matrix(system, P)
    x_mid = 0.5 * (x_n + x_next)
    return float(0.5 * x_next @ (H @ x_next) - 0.5 * x_n @ (H @ x_n) - dt * x_mid @ (G @ x_mid))


def _constraint_scale(system: SemiDiscreteSystem, x: np.ndarray) -> float:
    rows = system.S[system.algebraic_rows, :]
    return max(1.0, float(abs(rows).max()) * float(np.max(np.abs(x))))


def simulate(cfg: SimulationConfig) -> Trajectory:
    """
    Run the implicit midpoint scheme from cfg.initial to cfg.T.

    The step count is ceil(T/dt) and the step is shrunk to land on T
    exactly. Every step records the energy balance residual; samples are
    taken every record_every steps and at the final time.

    Raises:
        InconsistentState: If the initial state violates an algebraic row.
        SingularSolve: If the step operator cannot be factorized.
    """
    system = cfg.system
    layout = system.layout
    n_steps = 0 if cfg.T == 0 else int(math.ceil(cfg.T / cfg.dt - 1e-9))
    dt = cfg.T / n_steps if n_steps else cfg.dt
    if n_steps and dt != cfg.dt:
        logger.debug(f"dt adjusted from {cfg.dt:.6g} to {dt:.6g} to land on T={cfg.T}")

    P = cfg.P if layout.n else None
    H_field = energy_matrix(system, np.zeros((layout.n, layout.n)) if layout.n else None)
    H_total = energy_matrix(system, P) if layout.n else H_field
    G = dissipation_matrix(system, P)

    x = cfg.initial.to_vector(layout)
    initial_violation = float(np.max(np.abs(system.constraint_residual(x)), initial=0.0))
    if initial_violation > CONSTRAINT_TOL * _constraint_scale(system, x):
        raise InconsistentState(
            f"Initial state violates algebraic rows by {initial_violation:.3e}; "
            f"project it with apply_initial_conditions first"
        )

    traj = Trajectory(controller_kind=system.controller.kind.value, dt=dt, steps=n_steps)

    def total(vec: np.ndarray) -> float:
        return 0.5 * float(vec @ (H_total @ vec))

    def record(vec: np.ndarray, t: float, residual: float) -> None:
        state = DiscreteState.from_vector(vec, layout, t=t)
        field_e = 0.5 * float(vec @ (H_field @ vec))
        traj.times.append(t)
        traj.E_h.append(field_e)
        traj.E_hybrid.append(total(vec) if layout.n and P is not None else None)
        if cfg.constants is not None and cfg.delta is not None:
            storage = total(vec) - field_e if layout.n and P is not None else 0.0
            value = lyapunov_functional(
                state, system.params, system.grid, cfg.constants, cfg.delta,
                layout.closure, storage=storage,
            )
            traj.L_h.append(value.L)
        else:
            traj.L_h.append(None)
        traj.w1_end.append(state.w1_end)
        traj.w2_end.append(state.w2_end)
        traj.q_norm.append(float(np.linalg.norm(state.q)))
        traj.dissipation_residual.append(residual)
        if cfg.keep_states:
            traj.states.append(state)

    record(x, 0.0, 0.0)
    if n_steps == 0:
        return traj

    stepper = MidpointStepper(system, dt)
    energy = total(x)
    worst = 0.0

    for k in range(1, n_steps + 1):
        x_next = stepper.advance(x)
        x_mid = 0.5 * (x + x_next)
        energy_next = total(x_next)
        residual = energy_next - energy - dt * float(x_mid @ (G @ x_mid))
        if abs(residual) > abs(worst):
            worst = residual

        traj.max_energy_increase = max(traj.max_energy_increase, energy_next - energy)
        violation = float(np.max(np.abs(system.constraint_residual(x_next)), initial=0.0))
        traj.max_constraint_residual = max(traj.max_constraint_residual, violation)
        if violation > CONSTRAINT_TOL * _constraint_scale(system, x_next):
            raise InconsistentState(f"Algebraic rows violated by {violation:.3e} at step {k}")

        x, energy = x_next, energy_next
        if k % cfg.record_every == 0 or k == n_steps:
            record(x, k * dt, worst)
            worst = 0.0

    balance_tol = BALANCE_REL_TOL * max(traj.E_h[0], 1.0)
    worst_balance = max(abs(r) for r in traj.dissipation_residual)
    if worst_balance > balance_tol:
        logger.warning(f"Energy balance residual {worst_balance:.3e} above {balance_tol:.3e}")
    logger.debug(
        f"Simulated {n_steps} steps (dt={dt:.3e}): E {traj.E_h[0]:.6g} -> {traj.E_h[-1]:.6g}, "
        f"max residual {worst_balance:.3e}"
    )
    return traj
