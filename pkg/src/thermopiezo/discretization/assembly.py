"""
Order-reduced finite-difference assembly.

The system is the linear constant-coefficient DAE E x' = S x. Rod rows are
the three-point heat stencil at the rod nodes; beam rows are collocated at
the subinterval midpoints through the average and difference operators;
boundary and interface conditions are rows of S with zero rows in E.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
from scipy import sparse as sp
from scipy.sparse import linalg as splin

from thermopiezo.controllers.feedback import BoundaryLaw, ControllerSpec, boundary_law
from thermopiezo.discretization.grid import Grid
from thermopiezo.discretization.state import DiscreteState, InterfaceClosure, StateLayout
from thermopiezo.errors import ConstraintProjectionFailed, DimensionMismatch, SingularSolve
from thermopiezo.model.material import MaterialParams

logger = logging.getLogger(__name__)

U1, U2, W1, W2 = range(4)


class _Triplets:
    """COO accumulator; duplicate entries are summed on conversion."""

    def __init__(self) -> None:
        self.rows: list[int] = []
        self.cols: list[int] = []
        self.vals: list[float] = []

    def add(self, row: int, col: int, val: float) -> None:
        if val != 0.0:
            self.rows.append(row)
            self.cols.append(col)
            self.vals.append(val)

    def tocsc(self, dim: int) -> sp.csc_matrix:
        return sp.csc_matrix((self.vals, (self.rows, self.cols)), shape=(dim, dim))


@dataclass(frozen=True, eq=False)
class SemiDiscreteSystem:
    """Assembled pencil (E, S); immutable and shareable between simulations."""

    E: sp.csc_matrix
    S: sp.csc_matrix
    layout: StateLayout
    params: MaterialParams
    grid: Grid
    controller: ControllerSpec
    law: BoundaryLaw

    @property
    def dim(self) -> int:
        return self.layout.dim

    @property
    def algebraic_rows(self) -> list[int]:
        return self.layout.algebraic_rows

    @property
    def differential_mask(self) -> np.ndarray:
        return self.layout.differential_mask

    def constraint_residual(self, x: np.ndarray) -> np.ndarray:
        """Values of the algebraic rows at x."""
        return np.asarray(self.S[self.algebraic_rows, :] @ x)

    def bandwidth(self) -> int:
        """Largest |row - col| over the nonzeros of E and S outside the controller block."""
        pde = self.layout.q_offset
        width = 0
        for mat in (self.E, self.S):
            coo = mat[:pde, :pde].tocoo()
            if coo.nnz:
                width = max(width, int(np.max(np.abs(coo.row - coo.col))))
        return width


def _rod_block(trip_e: _Triplets, trip_s: _Triplets, layout: StateLayout,
               p: MaterialParams, g: Grid) -> None:
    N = layout.N
    coef = p.kappa / g.h1**2
    joint = layout.beam(0, W1)  # z_0 is carried by w1_0
    for j in range(1, N + 1):
        row = layout.rod(j)
        trip_e.add(row, row, 1.0)
        trip_s.add(row, row, -2.0 * coef)
        trip_s.add(row, joint if j == 1 else layout.rod(j - 1), coef)
        if j < N:
            trip_s.add(row, layout.rod(j + 1), coef)


def _joint_row(trip_e: _Triplets, trip_s: _Triplets, layout: StateLayout,
               p: MaterialParams, g: Grid) -> None:
    row = layout.joint_row
    w1_0 = layout.beam(0, W1)
    z_1 = layout.rod(1)
    flux = p.kappa / g.h1
    # axial stress (A u)_1 at the joint
    u1_0, u2_0 = layout.beam(0, U1), layout.beam(0, U2)

    if layout.closure == InterfaceClosure.BALANCED:
        trip_e.add(row, w1_0, 0.5 * g.h1)
        trip_s.add(row, z_1, flux)
        trip_s.add(row, w1_0, -flux)
        trip_s.add(row, u1_0, p.alpha)
        trip_s.add(row, u2_0, -p.coupling)
    else:
        trip_s.add(row, w1_0, flux)
        trip_s.add(row, z_1, -flux)
        trip_s.add(row, u1_0, -p.alpha)
        trip_s.add(row, u2_0, p.coupling)


def _beam_block(trip_e: _Triplets, trip_s: _Triplets, layout: StateLayout,
                p: MaterialParams, g: Grid) -> None:
    N = layout.N
    inv_h = 1.0 / g.h2
    mass = (1.0, 1.0, p.rho, p.mu)
    # midpoint equations: u_bar' = dw, M w_bar' = A du
    rhs = {
        U1: ((W1, 1.0),),
        U2: ((W2, 1.0),),
        W1: ((U1, p.alpha), (U2, -p.coupling)),
        W2: ((U1, -p.coupling), (U2, p.beta)),
    }
    for j in range(N + 1):
        for f in (U1, U2, W1, W2):
            row = layout.midpoint_row(j, f)
            trip_e.add(row, layout.beam(j, f), 0.5 * mass[f])
            trip_e.add(row, layout.beam(j + 1, f), 0.5 * mass[f])
            for src, coef in rhs[f]:
                trip_s.add(row, layout.beam(j, src), -coef * inv_h)
                trip_s.add(row, layout.beam(j + 1, src), coef * inv_h)

    trip_s.add(layout.anchor_row, layout.beam(0, W2), 1.0)


def _traction_rows(trip_s: _Triplets, layout: StateLayout, p: MaterialParams,
                   law: BoundaryLaw) -> None:
    end = layout.N + 1
    row1, row2 = layout.traction_rows
    # A u(l2) - g = 0 with g1 = -xi1 w1, g2 = -c^T q - d w2
    trip_s.add(row1, layout.beam(end, U1), p.alpha)
    trip_s.add(row1, layout.beam(end, U2), -p.coupling)
    trip_s.add(row1, layout.beam(end, W1), law.xi1)

    trip_s.add(row2, layout.beam(end, U1), -p.coupling)
    trip_s.add(row2, layout.beam(end, U2), p.beta)
    trip_s.add(row2, layout.beam(end, W2), law.d)
    for k in range(law.n):
        trip_s.add(row2, layout.q(k), float(law.c[k]))


def _controller_block(trip_e: _Triplets, trip_s: _Triplets, layout: StateLayout,
                      law: BoundaryLaw) -> None:
    w2_end = layout.beam(layout.N + 1, W2)
    for k in range(law.n):
        row = layout.q(k)
        trip_e.add(row, row, 1.0)
        trip_s.add(row, w2_end, float(law.b[k]))
        for m in range(law.n):
            trip_s.add(row, layout.q(m), float(law.A[k, m]))


def assemble_semidiscrete(
    p: MaterialParams,
    g: Grid,
    ctrl: ControllerSpec,
    closure: InterfaceClosure = InterfaceClosure.BALANCED,
) -> SemiDiscreteSystem:
    """
    Assemble E and S for the coupled rod-beam system under a controller.

    Args:
        p: Material parameters.
        g: Grid with N interior nodes per side.
        ctrl: Active boundary controller.
        closure: Joint flux closure.

    Returns:
        The semi-discrete system of dimension N + 4(N+2) + n.
    """
    law = boundary_law(ctrl)
    if law.A.shape != (law.n, law.n) or law.c.shape != (law.n,):
        raise DimensionMismatch(f"Controller blocks do not conform to n={law.n}")

    layout = StateLayout(N=g.N, n=law.n, closure=closure)
    trip_e, trip_s = _Triplets(), _Triplets()
    _rod_block(trip_e, trip_s, layout, p, g)
    _joint_row(trip_e, trip_s, layout, p, g)
    _beam_block(trip_e, trip_s, layout, p, g)
    _traction_rows(trip_s, layout, p, law)
    _controller_block(trip_e, trip_s, layout, law)

    system = SemiDiscreteSystem(
        E=trip_e.tocsc(layout.dim),
        S=trip_s.tocsc(layout.dim),
        layout=layout,
        params=p,
        grid=g,
        controller=ctrl,
        law=law,
    )
    logger.debug(
        f"Assembled {ctrl.kind.value} system: dim={layout.dim}, "
        f"algebraic rows={layout.algebraic_rows}, closure={closure.value}"
    )
    return system


def assemble_rod_dirichlet(p: MaterialParams, g: Grid) -> sp.csc_matrix:
    """Isolated rod block with z_0 = z_{N+1} = 0: the standard tridiagonal heat matrix."""
    coef = p.kappa / g.h1**2
    main = np.full(g.N, -2.0 * coef)
    off = np.full(g.N - 1, coef)
    return sp.diags([off, main, off], [-1, 0, 1], format="csc")


def locate_zero_pivot(matrix: sp.spmatrix) -> int:
    """Index of the smallest pivot of a dense LU; used to report singular solves."""
    _, _, upper = la.lu(matrix.toarray())
    return int(np.argmin(np.abs(np.diag(upper))))


def factorize(matrix: sp.spmatrix, what: str) -> splin.SuperLU:
    """splu with a SingularSolve carrying the pivot location on failure."""
    try:
        return splin.splu(sp.csc_matrix(matrix))
    except RuntimeError as e:
        pivot = locate_zero_pivot(matrix)
        raise SingularSolve(f"{what}: {e}", pivot=pivot) from e


def time_derivative(system: SemiDiscreteSystem, x: np.ndarray) -> np.ndarray:
    """
    x' for a consistent state: differential rows of E x' = S x together
    with the differentiated algebraic rows S_alg x' = 0.
    """
    mask = system.differential_mask
    lhs = sp.lil_matrix(system.E)
    alg = system.algebraic_rows
    lhs[alg, :] = system.S[alg, :]
    rhs = np.asarray(system.S @ x)
    rhs[~mask] = 0.0
    lu = factorize(lhs.tocsc(), "time derivative")
    return lu.solve(rhs)


def project_constraints(system: SemiDiscreteSystem, x: np.ndarray) -> np.ndarray:
    """
    Overwrite the pivot unknowns so that every algebraic row holds.

    Raises:
        ConstraintProjectionFailed: If the boundary block is singular.
    """
    layout = system.layout
    alg = system.algebraic_rows
    pivots = layout.pivot_columns
    S_alg = system.S[alg, :].toarray()

    others = np.ones(layout.dim, dtype=bool)
    others[pivots] = False
    block = S_alg[:, pivots]
    rhs = -S_alg[:, others] @ x[others]
    try:
        values = la.solve(block, rhs)
    except la.LinAlgError as e:
        raise ConstraintProjectionFailed(f"Boundary block is singular: {e}") from e

    projected = x.copy()
    projected[pivots] = values
    return projected


def consistent_state(system: SemiDiscreteSystem, state: DiscreteState) -> DiscreteState:
    """Project a sampled state onto the constraint manifold; z_0 follows w1_0."""
    x = project_constraints(system, state.to_vector(system.layout))
    return DiscreteState.from_vector(x, system.layout, t=state.t)
