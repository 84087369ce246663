"""Tests for the implicit midpoint timestepper."""

import numpy as np
import pytest
from scipy.linalg import eig

from thermopiezo.config.constants import CSV_COLUMNS
from thermopiezo.controllers.feedback import OpenLoop
from thermopiezo.controllers.mky import solve_mky
from thermopiezo.discretization.assembly import assemble_semidiscrete
from thermopiezo.discretization.grid import build_grid
from thermopiezo.discretization.initial import InitialProfiles, apply_initial_conditions
from thermopiezo.discretization.state import DiscreteState, InterfaceClosure
from thermopiezo.errors import ConfigValidationError, InconsistentState
from thermopiezo.timestepper.midpoint import (
    MidpointStepper,
    SimulationConfig,
    default_time_step,
    dissipation_residual,
    simulate,
    step,
)


def _run(system, profiles, grid, dt=0.01, T=0.5, **kwargs):
    initial = apply_initial_conditions(profiles, grid, system)
    return simulate(SimulationConfig(system=system, initial=initial, dt=dt, T=T, **kwargs))


class TestSimulate:
    """Test suite for simulate."""

    def test_zero_horizon(self, static_system, grid, sine_profiles):
        """Test that T = 0 records only the initial sample."""
        traj = _run(static_system, sine_profiles, grid, T=0.0)

        assert traj.samples == 1
        assert traj.steps == 0
        assert traj.dissipation_residual == [0.0]

    def test_zero_state_stays_zero(self, static_system, grid):
        """Test that the zero state is an equilibrium."""
        traj = _run(static_system, InitialProfiles(), grid, T=0.1)

        assert all(e == 0.0 for e in traj.E_h)

    def test_step_lands_on_final_time(self, static_system, grid, sine_profiles):
        """Test that dt = 0.03 on T = 0.1 becomes four steps of 0.025."""
        traj = _run(static_system, sine_profiles, grid, dt=0.03, T=0.1)

        assert traj.steps == 4
        assert traj.dt == pytest.approx(0.025)
        assert traj.times[-1] == pytest.approx(0.1)

    def test_record_every(self, static_system, grid, sine_profiles):
        """Test sampling every 5 steps plus the initial sample."""
        traj = _run(static_system, sine_profiles, grid, dt=0.01, T=0.5, record_every=5)

        assert traj.samples == 11

    @pytest.mark.parametrize("closure", list(InterfaceClosure))
    def test_static_energy_monotone(self, coupled_params, grid, static_ctrl, sine_profiles,
                                    closure):
        """Test that E_h never increases under static feedback."""
        system = assemble_semidiscrete(coupled_params, grid, static_ctrl, closure)
        traj = _run(system, sine_profiles, grid, dt=0.005, T=1.0)
        energy = np.asarray(traj.E_h)

        assert np.all(np.diff(energy) <= 1e-12 * energy[0])
        assert energy[-1] < energy[0]

    def test_energy_balance(self, coupled_params, grid, static_ctrl, sine_profiles):
        """Test that the discrete balance holds to roundoff at every step."""
        system = assemble_semidiscrete(coupled_params, grid, static_ctrl)
        traj = _run(system, sine_profiles, grid, dt=0.01, T=1.0)

        assert max(abs(r) for r in traj.dissipation_residual) <= 1e-10 * max(traj.E_h[0], 1.0)

    def test_hybrid_energy_monotone(self, canonical_params, grid, remark_ctrl, sine_profiles):
        """Test that E_h + P q^2 / 2 is nonincreasing under the unit hybrid controller."""
        system = assemble_semidiscrete(canonical_params, grid, remark_ctrl)
        traj = _run(system, sine_profiles, grid, dt=0.01, T=1.0, P=np.eye(1))
        total = traj.energy

        assert traj.E_hybrid[0] == pytest.approx(traj.E_h[0] + 0.5 * 0.2**2)
        assert np.all(np.diff(total) <= 1e-12 * total[0])

    def test_open_loop_conserves_mechanics(self, canonical_params, grid, sine_profiles):
        """Test that without feedback only the rod dissipates."""
        system = assemble_semidiscrete(canonical_params, grid, OpenLoop())
        traj = _run(system, sine_profiles, grid, dt=0.01, T=0.5)

        assert traj.E_h[-1] <= traj.E_h[0]
        assert traj.max_energy_increase <= 1e-12 * traj.E_h[0]

    def test_inconsistent_initial_state(self, static_system, grid):
        """Test that an unprojected state with w2(0) != 0 is refused."""
        s = DiscreteState.zeros(grid)
        s.w2[0] = 1.0

        with pytest.raises(InconsistentState):
            simulate(SimulationConfig(system=static_system, initial=s, dt=0.01, T=0.1))

    def test_frame_columns(self, static_system, grid, sine_profiles):
        """Test the CSV column order and empty hybrid columns."""
        frame = _run(static_system, sine_profiles, grid, T=0.05).to_frame()

        assert tuple(frame.columns) == CSV_COLUMNS
        assert frame["E_hybrid"].isna().all()


class TestSimulationConfig:
    """Test suite for run parameter checks."""

    def test_nonpositive_dt(self, static_system, grid):
        """Test that dt = 0 is rejected."""
        with pytest.raises(ConfigValidationError):
            SimulationConfig(system=static_system, initial=DiscreteState.zeros(grid), dt=0.0, T=1.0)

    def test_horizon_below_step(self, static_system, grid):
        """Test that 0 < T < dt is rejected."""
        with pytest.raises(ConfigValidationError):
            SimulationConfig(system=static_system, initial=DiscreteState.zeros(grid), dt=0.1,
                             T=0.05)

    def test_default_time_step(self, canonical_params, grid):
        """Test that the automatic step respects the diffusive limit."""
        assert default_time_step(canonical_params, grid) <= grid.h1**2 / 4.0


class TestMidpointStep:
    """Test suite for single steps and residuals."""

    def test_step_matches_stepper(self, static_system, grid, sine_profiles):
        """Test that step() and a reused MidpointStepper agree."""
        s = apply_initial_conditions(sine_profiles, grid, static_system)
        a = step(static_system, s, 0.01)
        b = MidpointStepper(static_system, 0.01).advance_state(s)

        np.testing.assert_array_equal(a.w1, b.w1)
        assert a.t == pytest.approx(0.01)

    def test_corrupted_step_breaks_balance(self, static_system, grid, sine_profiles):
        """Test that perturbing x_{n+1} gives a visible residual."""
        s = apply_initial_conditions(sine_profiles, grid, static_system)
        x = s.to_vector(static_system.layout)
        x_next = MidpointStepper(static_system, 0.01).advance(x)

        assert abs(dissipation_residual(x, x_next, static_system, 0.01)) <= 1e-12
        corrupted = x_next.copy()
        corrupted[static_system.layout.beam(3, 3)] += 1e-3
        assert abs(dissipation_residual(x, corrupted, static_system, 0.01)) > 1e-6

    def test_temporal_order(self, canonical_params, static_ctrl):
        """Test an observed order of at least 1.9 in dt on a rod sine mode."""
        g = build_grid(5, 1.0, 1.0)
        system = assemble_semidiscrete(canonical_params, g, static_ctrl)
        profiles = InitialProfiles(z0=lambda y: np.sin(np.pi * y))
        x0 = apply_initial_conditions(profiles, g, system).to_vector(system.layout)

        def solve(dt: float, T: float = 0.1) -> np.ndarray:
            stepper = MidpointStepper(system, dt)
            x = x0
            for _ in range(int(round(T / dt))):
                x = stepper.advance(x)
            return x

        reference = solve(0.01 / 64)
        errors = [np.max(np.abs(solve(dt) - reference)) for dt in (0.01, 0.005, 0.0025)]
        orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))

        assert np.all(orders >= 1.9)

    def test_eigenmode_amplification(self, canonical_params, small_grid, static_ctrl):
        """Test that one step scales a generalized eigenvector by (1 + dt l/2)/(1 - dt l/2)."""
        system = assemble_semidiscrete(canonical_params, small_grid, static_ctrl)
        E = np.diag(system.differential_mask.astype(float)) @ system.E.toarray()
        values, vectors = eig(system.S.toarray(), E)
        finite = np.flatnonzero(np.isfinite(values) & (np.abs(values) < 1e8)
                                & (values.real < -1e-6))
        k = finite[np.argmax(values[finite].real)]
        lam, x = values[k], vectors[:, k]
        dt = 0.05

        def advance(v: np.ndarray) -> np.ndarray:
            state = DiscreteState.from_vector(v, system.layout)
            return step(system, state, dt).to_vector(system.layout)

        x_next = advance(x.real) + 1j * advance(x.imag)
        factor = (1.0 + 0.5 * dt * lam) / (1.0 - 0.5 * dt * lam)

        np.testing.assert_allclose(x_next, factor * x, atol=1e-9 * np.linalg.norm(x))


class TestUnconditionalStability:
    """Test suite for energy decay at any step size."""

    @pytest.mark.parametrize("dt", [1e-4, 1e-3, 1e-2, 1e-1])
    def test_static(self, coupled_params, grid, static_ctrl, sine_profiles, dt):
        """Test that E_h never increases under static feedback."""
        system = assemble_semidiscrete(coupled_params, grid, static_ctrl)
        energy = np.asarray(_run(system, sine_profiles, grid, dt=dt, T=50 * dt).E_h)

        assert np.all(np.diff(energy) <= 1e-10 * energy[0])

    @pytest.mark.parametrize("dt", [1e-4, 1e-3, 1e-2, 1e-1])
    def test_certified_hybrid(self, coupled_params, grid, hybrid2_ctrl, sine_profiles, dt):
        """Test that E_hybrid never increases under a certified hybrid controller."""
        cert = solve_mky(hybrid2_ctrl)
        system = assemble_semidiscrete(coupled_params, grid, hybrid2_ctrl)
        energy = _run(system, sine_profiles, grid, dt=dt, T=50 * dt, P=cert.P).energy

        assert np.all(np.diff(energy) <= 1e-10 * energy[0])
