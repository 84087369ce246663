"""Discrete state of the coupled system and its packing into the unknown vector."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from thermopiezo.discretization.grid import Grid
from thermopiezo.errors import DimensionMismatch

BEAM_FIELDS = ("u1", "u2", "w1", "w2")


class InterfaceClosure(str, Enum):
    """How the heat flux enters the joint."""

    BALANCED = "balanced"  # half-cell energy balance, differential row
    STRONG = "strong"  # algebraic flux row


@dataclass(frozen=True)
class StateLayout:
    """
    Positions of the unknowns, ordered left to right.

    Rod nodes z_N..z_1 come first, then beam nodes 0..N+1 interleaved as
    (u1, u2, w1, w2), then the controller state. z_{N+1} = 0 and z_0 = w1_0
    are eliminated.
    """

    N: int
    n: int = 0
    closure: InterfaceClosure = InterfaceClosure.BALANCED

    @property
    def dim(self) -> int:
        return self.N + 4 * (self.N + 2) + self.n

    @property
    def beam_offset(self) -> int:
        return self.N

    @property
    def q_offset(self) -> int:
        return self.N + 4 * (self.N + 2)

    def rod(self, j: int) -> int:
        """Column of z_j for j = 1..N."""
        if not 1 <= j <= self.N:
            raise IndexError(f"Rod unknown z_{j} is eliminated or out of range")
        return self.N - j

    def beam(self, j: int, f: int) -> int:
        """Column of field f (0=u1, 1=u2, 2=w1, 3=w2) at beam node j."""
        return self.N + 4 * j + f

    def q(self, k: int) -> int:
        return self.q_offset + k

    # Row placement of the equations

    @property
    def joint_row(self) -> int:
        return self.N

    @property
    def anchor_row(self) -> int:
        """Row enforcing w2_0 = 0."""
        return self.N + 1

    def midpoint_row(self, j: int, f: int) -> int:
        return self.N + 2 + 4 * j + f

    @property
    def traction_rows(self) -> tuple[int, int]:
        last = self.q_offset - 1
        return last - 1, last

    @property
    def algebraic_rows(self) -> list[int]:
        rows = [self.anchor_row, *self.traction_rows]
        if self.closure == InterfaceClosure.STRONG:
            rows.insert(0, self.joint_row)
        return rows

    @property
    def differential_mask(self) -> np.ndarray:
        mask = np.ones(self.dim, dtype=bool)
        mask[self.algebraic_rows] = False
        return mask

    @property
    def pivot_columns(self) -> list[int]:
        """Unknowns the algebraic rows are solved for during projection."""
        cols = [self.beam(0, 3), self.beam(self.N + 1, 0), self.beam(self.N + 1, 1)]
        if self.closure == InterfaceClosure.STRONG:
            cols.insert(0, self.beam(0, 0))
        return cols


@dataclass
class DiscreteState:
    """Node values of every field plus the controller state at time t."""

    z: np.ndarray  # rod nodes 0..N+1, node 0 at the joint
    u1: np.ndarray
    u2: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    q: np.ndarray = field(default_factory=lambda: np.zeros(0))
    t: float = 0.0

    @property
    def N(self) -> int:
        return len(self.z) - 2

    @property
    def w1_end(self) -> float:
        return float(self.w1[-1])

    @property
    def w2_end(self) -> float:
        return float(self.w2[-1])

    @property
    def beam_u(self) -> np.ndarray:
        """(N+2, 2) array of strain-like fields."""
        return np.column_stack([self.u1, self.u2])

    @property
    def beam_w(self) -> np.ndarray:
        """(N+2, 2) array of velocity-like fields."""
        return np.column_stack([self.w1, self.w2])

    @classmethod
    def zeros(cls, grid: Grid, n: int = 0, t: float = 0.0) -> "DiscreteState":
        size = grid.N + 2
        return cls(
            z=np.zeros(size),
            u1=np.zeros(size),
            u2=np.zeros(size),
            w1=np.zeros(size),
            w2=np.zeros(size),
            q=np.zeros(n),
            t=t,
        )

    def copy(self, t: Optional[float] = None) -> "DiscreteState":
        return DiscreteState(
            z=self.z.copy(),
            u1=self.u1.copy(),
            u2=self.u2.copy(),
            w1=self.w1.copy(),
            w2=self.w2.copy(),
            q=self.q.copy(),
            t=self.t if t is None else t,
        )

    def to_vector(self, layout: StateLayout) -> np.ndarray:
        """Pack into the unknown vector; z_0 and z_{N+1} are not stored."""
        if self.N != layout.N or len(self.q) != layout.n:
            raise DimensionMismatch(
                f"State (N={self.N}, n={len(self.q)}) does not match layout "
                f"(N={layout.N}, n={layout.n})"
            )
        x = np.empty(layout.dim)
        x[: layout.N] = self.z[layout.N : 0 : -1]
        beam = np.column_stack([self.u1, self.u2, self.w1, self.w2])
        x[layout.beam_offset : layout.q_offset] = beam.ravel()
        x[layout.q_offset :] = self.q
        return x

    @classmethod
    def from_vector(cls, x: np.ndarray, layout: StateLayout, t: float = 0.0) -> "DiscreteState":
        """Unpack, restoring z_0 = w1_0 and z_{N+1} = 0."""
        if len(x) != layout.dim:
            raise DimensionMismatch(f"Vector length {len(x)} != layout dim {layout.dim}")
        N = layout.N
        beam = np.asarray(x[layout.beam_offset : layout.q_offset]).reshape(N + 2, 4)
        z = np.zeros(N + 2)
        z[1 : N + 1] = x[:N][::-1]
        z[0] = beam[0, 2]
        return cls(
            z=z,
            u1=beam[:, 0].copy(),
            u2=beam[:, 1].copy(),
            w1=beam[:, 2].copy(),
            w2=beam[:, 3].copy(),
            q=np.array(x[layout.q_offset :], dtype=float),
            t=t,
        )

    def to_dict(self) -> dict:
        """Convert to dictionary for snapshots."""
        return {
            "t": self.t,
            "z": self.z.tolist(),
            "u1": self.u1.tolist(),
            "u2": self.u2.tolist(),
            "w1": self.w1.tolist(),
            "w2": self.w2.tolist(),
            "q": self.q.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DiscreteState":
        """Create from dictionary."""
        return cls(
            z=np.asarray(data["z"], dtype=float),
            u1=np.asarray(data["u1"], dtype=float),
            u2=np.asarray(data["u2"], dtype=float),
            w1=np.asarray(data["w1"], dtype=float),
            w2=np.asarray(data["w2"], dtype=float),
            q=np.asarray(data.get("q", []), dtype=float),
            t=float(data.get("t", 0.0)),
        )
