"""Discrete energy, its matrix form and the discrete dissipation."""

from typing import Optional

import numpy as np
from scipy import sparse as sp

from thermopiezo.controllers.feedback import boundary_force
from thermopiezo.discretization.assembly import SemiDiscreteSystem
from thermopiezo.discretization.grid import Grid, midpoint_average, midpoint_difference
from thermopiezo.discretization.state import DiscreteState, InterfaceClosure
from thermopiezo.errors import MissingCertificate
from thermopiezo.model.material import MaterialParams, derive_matrices


def rod_weights(grid: Grid, closure: InterfaceClosure = InterfaceClosure.BALANCED) -> np.ndarray:
    """
    Trapezoid weights over rod nodes 0..N+1.

    The joint node carries h1/2 under the balanced closure and nothing under
    the strong closure, matching where its heat content is accounted for.
    """
    weights = np.full(grid.N + 2, grid.h1)
    weights[-1] = 0.5 * grid.h1
    weights[0] = 0.5 * grid.h1 if closure == InterfaceClosure.BALANCED else 0.0
    return weights


def rod_energy(state: DiscreteState, grid: Grid,
               closure: InterfaceClosure = InterfaceClosure.BALANCED) -> float:
    return 0.5 * float(rod_weights(grid, closure) @ state.z**2)


def beam_energy(state: DiscreteState, p: MaterialParams, grid: Grid) -> float:
    """(h2/2) sum over midpoints of u^T A u + w^T M w at the midpoint averages."""
    mats = derive_matrices(p)
    u_bar = midpoint_average(state.beam_u)
    w_bar = midpoint_average(state.beam_w)
    strain = np.einsum("ji,ik,jk->j", u_bar, mats.A2, u_bar)
    kinetic = np.einsum("ji,ik,jk->j", w_bar, mats.M2, w_bar)
    return 0.5 * grid.h2 * float(np.sum(strain + kinetic))


def field_energy(state: DiscreteState, p: MaterialParams, grid: Grid,
                 closure: InterfaceClosure = InterfaceClosure.BALANCED) -> float:
    """Rod plus beam energy, without any controller storage."""
    return rod_energy(state, grid, closure) + beam_energy(state, p, grid)


def controller_storage(q: np.ndarray, P: np.ndarray) -> float:
    return 0.5 * float(q @ P @ q)


def discrete_energy(
    state: DiscreteState,
    p: MaterialParams,
    grid: Grid,
    P: Optional[np.ndarray] = None,
    closure: InterfaceClosure = InterfaceClosure.BALANCED,
) -> float:
    """
    E_h = field energy + q^T P q / 2.

    Raises:
        MissingCertificate: If the state carries a controller state but no P is given.
    """
    energy = field_energy(state, p, grid, closure)
    if len(state.q):
        if P is None:
            raise MissingCertificate(
                "Dynamic controller state present; a certificate matrix P is required"
            )
        energy += controller_storage(state.q, np.atleast_2d(P))
    return energy


def energy_matrix(system: SemiDiscreteSystem, P: Optional[np.ndarray] = None) -> sp.csc_matrix:
    """Sparse symmetric H with E_h = x^T H x / 2 on the unknown vector."""
    layout = system.layout
    grid = system.grid
    mats = derive_matrices(system.params)
    if layout.n and P is None:
        raise MissingCertificate("energy_matrix needs P for a dynamic controller")

    H = sp.lil_matrix((layout.dim, layout.dim))
    weights = rod_weights(grid, layout.closure)
    for j in range(1, layout.N + 1):
        H[layout.rod(j), layout.rod(j)] = weights[j]
    H[layout.beam(0, 2), layout.beam(0, 2)] += weights[0]

    # each midpoint average is (x_j + x_{j+1})/2, so every cell adds h2/4 * K to four blocks
    cell = {"u": (0, mats.A2), "w": (2, mats.M2)}
    for j in range(layout.N + 1):
        for offset, K in cell.values():
            for a in (j, j + 1):
                for b in (j, j + 1):
                    for r in range(2):
                        for s in range(2):
                            H[layout.beam(a, offset + r), layout.beam(b, offset + s)] += (
                                0.25 * grid.h2 * K[r, s]
                            )

    if layout.n:
        Pm = np.atleast_2d(P)
        for k in range(layout.n):
            for m in range(layout.n):
                H[layout.q(k), layout.q(m)] = Pm[k, m]
    return H.tocsc()


def heat_dissipation(state: DiscreteState, p: MaterialParams, grid: Grid) -> float:
    """kappa h1 sum of squared rod differences over nodes 0..N+1."""
    slopes = midpoint_difference(state.z, grid.h1)
    return p.kappa * grid.h1 * float(np.sum(slopes**2))


def dissipation(system: SemiDiscreteSystem, state: DiscreteState,
                P: Optional[np.ndarray] = None) -> float:
    """
    Rate of change of E_h along the semi-discrete flow at a consistent state.

    D = -kappa h1 sum |dz|^2 + w1_end g1 + w2_end g2 + q^T P (A q + b w2_end).
    """
    g1, g2 = boundary_force(system.controller, state.w1_end, state.w2_end, state.q)
    rate = -heat_dissipation(state, system.params, system.grid)
    rate += state.w1_end * g1 + state.w2_end * g2
    law = system.law
    if law.n:
        if P is None:
            raise MissingCertificate("Dissipation of a dynamic controller needs P")
        qdot = law.A @ state.q + law.b * state.w2_end
        rate += float(state.q @ np.atleast_2d(P) @ qdot)
    return rate


def dissipation_matrix(
    system: SemiDiscreteSystem, P: Optional[np.ndarray] = None
) -> sp.csc_matrix:
    """Symmetric G with D(x) = x^T G x, assembled from the same terms as dissipation()."""
    layout = system.layout
    law = system.law
    if layout.n and P is None:
        raise MissingCertificate("dissipation_matrix needs P for a dynamic controller")

    dim = layout.dim
    G = sp.lil_matrix((dim, dim))

    # heat term over rod differences z_{j+1} - z_j, j = 0..N
    weight = system.params.kappa / system.grid.h1
    column = [layout.beam(0, 2)] + [layout.rod(j) for j in range(1, layout.N + 1)]
    for j in range(layout.N + 1):
        left = column[j]
        right = column[j + 1] if j + 1 <= layout.N else None
        G[left, left] -= weight
        if right is not None:
            G[right, right] -= weight
            G[left, right] += weight
            G[right, left] += weight

    w1_end = layout.beam(layout.N + 1, 2)
    w2_end = layout.beam(layout.N + 1, 3)
    G[w1_end, w1_end] -= law.xi1
    G[w2_end, w2_end] -= law.d

    if layout.n:
        Pm = np.atleast_2d(P)
        PA = Pm @ law.A
        Pb = Pm @ law.b
        for k in range(layout.n):
            qk = layout.q(k)
            # -w2 c^T q + q^T P b w2, split symmetrically
            G[qk, w2_end] += 0.5 * (Pb[k] - law.c[k])
            G[w2_end, qk] += 0.5 * (Pb[k] - law.c[k])
            for m in range(layout.n):
                G[qk, layout.q(m)] += 0.5 * (PA[k, m] + PA[m, k])
    return G.tocsc()
