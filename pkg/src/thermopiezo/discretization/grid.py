"""Uniform grids on the rod and the beam, and the midpoint operators."""

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from thermopiezo.config.constants import MIN_INTERIOR_NODES
from thermopiezo.errors import IndexOutOfRange, NTooSmall

ArrayOrFloat = Union[np.ndarray, float]


@dataclass(frozen=True)
class Grid:
    """
    N interior nodes per side.

    Rod nodes are measured as the distance y from the joint, so rod node 0
    is the joint and rod node N+1 is the far Dirichlet end. Beam nodes run
    from the joint (x=0) to the controlled end (x=l2).
    """

    N: int
    l1: float
    l2: float

    @property
    def h1(self) -> float:
        return self.l1 / (self.N + 1)

    @property
    def h2(self) -> float:
        return self.l2 / (self.N + 1)

    @property
    def rod_nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.l1, self.N + 2)

    @property
    def beam_nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.l2, self.N + 2)

    @property
    def beam_midpoints(self) -> np.ndarray:
        nodes = self.beam_nodes
        return 0.5 * (nodes[:-1] + nodes[1:])

    def to_dict(self) -> dict[str, float]:
        return {"N": self.N, "l1": self.l1, "l2": self.l2, "h1": self.h1, "h2": self.h2}


def build_grid(N: int, l1: float, l2: float) -> Grid:
    """
    Build the per-side uniform grid with h = l/(N+1).

    Raises:
        NTooSmall: If N < 2.
    """
    if N < MIN_INTERIOR_NODES:
        raise NTooSmall(N)
    if l1 <= 0 or l2 <= 0:
        raise ValueError(f"Lengths must be positive, got l1={l1}, l2={l2}")
    return Grid(N=int(N), l1=float(l1), l2=float(l2))


def _check_index(values: np.ndarray, j: int) -> None:
    if not 0 <= j <= len(values) - 2:
        raise IndexOutOfRange(f"Midpoint index {j} outside 0..{len(values) - 2}")


def midpoint_average(values: np.ndarray, j: Optional[int] = None) -> ArrayOrFloat:
    """(u_j + u_{j+1})/2 at midpoint j, or at every midpoint when j is None."""
    values = np.asarray(values, dtype=float)
    if j is None:
        return 0.5 * (values[:-1] + values[1:])
    _check_index(values, j)
    return float(0.5 * (values[j] + values[j + 1]))


def midpoint_difference(values: np.ndarray, h: float, j: Optional[int] = None) -> ArrayOrFloat:
    """(u_{j+1} - u_j)/h at midpoint j, or at every midpoint when j is None."""
    values = np.asarray(values, dtype=float)
    if j is None:
        return np.diff(values) / h
    _check_index(values, j)
    return float((values[j + 1] - values[j]) / h)
