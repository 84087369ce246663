"""Pytest configuration and fixtures."""

import numpy as np
import pytest

from thermopiezo.controllers.feedback import (
    HybridFeedback,
    OpenLoop,
    ScalarDynamic,
    StaticFeedback,
)
from thermopiezo.discretization.assembly import SemiDiscreteSystem, assemble_semidiscrete
from thermopiezo.discretization.grid import Grid, build_grid
from thermopiezo.discretization.initial import InitialProfiles
from thermopiezo.model.lyapunov import LyapunovConstants, compute_lyapunov_constants
from thermopiezo.model.material import MaterialParams

CANONICAL = {
    "rho": 1.0,
    "mu": 1.0,
    "alpha1": 4.0,
    "beta": 1.0,
    "gamma": 0.0,
    "kappa": 1.0,
    "l1": 1.0,
    "l2": 1.0,
}


@pytest.fixture
def canonical_dict() -> dict:
    """Canonical parameters as a raw mapping."""
    return dict(CANONICAL)


@pytest.fixture
def canonical_params() -> MaterialParams:
    """rho = mu = beta = kappa = l1 = l2 = 1, alpha1 = 4, gamma = 0."""
    return MaterialParams(**CANONICAL)


@pytest.fixture
def coupled_params() -> MaterialParams:
    """Parameters with nonzero piezoelectric coupling."""
    return MaterialParams(rho=1.5, mu=0.8, alpha1=3.0, beta=2.0, gamma=0.4, kappa=0.7,
                          l1=1.2, l2=0.9)


@pytest.fixture
def canonical_constants(canonical_params: MaterialParams) -> LyapunovConstants:
    return compute_lyapunov_constants(canonical_params)


@pytest.fixture
def small_grid() -> Grid:
    """N = 3 on unit lengths."""
    return build_grid(3, 1.0, 1.0)


@pytest.fixture
def grid() -> Grid:
    """N = 10 on unit lengths."""
    return build_grid(10, 1.0, 1.0)


@pytest.fixture
def static_ctrl() -> StaticFeedback:
    return StaticFeedback(xi1=1.0, xi2=1.0)


@pytest.fixture
def open_loop() -> OpenLoop:
    return OpenLoop()


@pytest.fixture
def scalar_ctrl() -> ScalarDynamic:
    return ScalarDynamic(xi2=1.0, eta=0.3)


@pytest.fixture
def remark_ctrl() -> HybridFeedback:
    """A = -1, b = c = 1, d = Gamma = 0: certificate P = q1 = Delta = 1."""
    return HybridFeedback(A=[[-1.0]], b=[1.0], c=[1.0], d=0.0, gamma=0.0, zeta=[0.2])


@pytest.fixture
def hybrid2_ctrl() -> HybridFeedback:
    """Two-state positive-real controller with a strict margin (d > Gamma)."""
    return HybridFeedback(
        A=[[-1.0, 0.5], [-0.5, -2.0]],
        b=[1.0, 0.5],
        c=[1.0, 0.5],
        d=1.0,
        gamma=0.5,
        zeta=[0.1, -0.1],
    )


@pytest.fixture
def static_system(canonical_params: MaterialParams, grid: Grid,
                  static_ctrl: StaticFeedback) -> SemiDiscreteSystem:
    return assemble_semidiscrete(canonical_params, grid, static_ctrl)


@pytest.fixture
def sine_profiles() -> InitialProfiles:
    """Smooth data vanishing where the boundary rows pin values."""
    return InitialProfiles(
        z0=lambda y: np.sin(np.pi * y),
        v1=lambda x: np.sin(np.pi * x),
        p1=lambda x: 0.5 * np.sin(2.0 * np.pi * x),
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(42)
