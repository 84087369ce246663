"""Tests for the Lyapunov functional and its equivalence with the energy."""

import numpy as np
import pytest

from thermopiezo.analysis.functional import lyapunov_functional, sandwich_check
from thermopiezo.discretization.energy import discrete_energy
from thermopiezo.discretization.state import DiscreteState, InterfaceClosure
from thermopiezo.errors import DeltaOutOfRange
from thermopiezo.model.lyapunov import compute_lyapunov_constants


class TestLyapunovFunctional:
    """Test suite for lyapunov_functional."""

    def test_zero_state(self, canonical_params, canonical_constants, grid):
        """Test that every term vanishes at the zero state."""
        value = lyapunov_functional(DiscreteState.zeros(grid), canonical_params, grid,
                                    canonical_constants, 0.01)

        assert value == (0.0, 0.0, 0.0, 0.0, 0.0)

    def test_constant_temperature(self, canonical_params, canonical_constants, grid):
        """Test F3 = c1 l1 = 1 for z = 1."""
        s = DiscreteState.zeros(grid)
        s.z[:] = 1.0
        value = lyapunov_functional(s, canonical_params, grid, canonical_constants, 0.01)

        assert value.F3 == pytest.approx(1.0)
        assert value.F1 == 0.0

    def test_constant_strain(self, canonical_params, canonical_constants, grid):
        """Test F2 = b1 alpha l2^2 / 2 for u1 = 1."""
        s = DiscreteState.zeros(grid)
        s.u1[:] = 1.0
        value = lyapunov_functional(s, canonical_params, grid, canonical_constants, 0.01)

        assert value.F2 == pytest.approx(0.5 * canonical_params.alpha)

    def test_zero_delta_is_energy(self, coupled_params, grid, rng):
        """Test L = E when delta = 0."""
        consts = compute_lyapunov_constants(coupled_params)
        s = DiscreteState.zeros(grid)
        s.w1[:] = rng.standard_normal(grid.N + 2)
        s.u2[:] = rng.standard_normal(grid.N + 2)
        value = lyapunov_functional(s, coupled_params, grid, consts, 0.0)

        assert value.L == value.E
        assert value.E == pytest.approx(discrete_energy(s, coupled_params, grid))

    def test_storage_adds_to_energy(self, canonical_params, canonical_constants, grid):
        """Test that the controller storage enters E and L."""
        value = lyapunov_functional(DiscreteState.zeros(grid), canonical_params, grid,
                                    canonical_constants, 0.01, storage=0.5)

        assert value.E == 0.5
        assert value.L == 0.5

    @pytest.mark.parametrize("delta", [-1e-3, 1.0 / 24.0, 0.1])
    def test_delta_out_of_range(self, canonical_params, canonical_constants, grid, delta):
        """Test that delta outside [0, 1/M) is rejected."""
        with pytest.raises(DeltaOutOfRange):
            lyapunov_functional(DiscreteState.zeros(grid), canonical_params, grid,
                                canonical_constants, delta)


class TestSandwichCheck:
    """Test suite for the equivalence with the energy."""

    @pytest.mark.parametrize("closure", list(InterfaceClosure))
    def test_random_states(self, coupled_params, grid, rng, closure):
        """Test (1 - M delta) E <= L <= (1 + M delta) E on 200 random states."""
        consts = compute_lyapunov_constants(coupled_params)
        delta = 0.9 / consts.Mconst
        for _ in range(200):
            s = DiscreteState.zeros(grid)
            for name in ("z", "u1", "u2", "w1", "w2"):
                getattr(s, name)[:] = rng.standard_normal(getattr(s, name).shape)
            result = sandwich_check(s, coupled_params, grid, consts, delta, closure)

            assert result.passed, result

    def test_margins_at_zero_delta(self, canonical_params, canonical_constants, grid):
        """Test that both margins vanish when delta = 0."""
        s = DiscreteState.zeros(grid)
        s.w2[:] = np.linspace(0.0, 1.0, grid.N + 2)
        result = sandwich_check(s, canonical_params, grid, canonical_constants, 0.0)

        assert result.passed
        assert result.lower_margin == pytest.approx(0.0, abs=1e-15)
        assert result.upper_margin == pytest.approx(0.0, abs=1e-15)
