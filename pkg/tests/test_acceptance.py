"""Full-horizon checks on the canonical configuration."""

import numpy as np
import pytest

from thermopiezo.analysis.decay import fit_decay_rate, verify_envelope
from thermopiezo.analysis.functional import sandwich_check
from thermopiezo.controllers.feedback import OpenLoop
from thermopiezo.discretization.assembly import assemble_semidiscrete
from thermopiezo.discretization.grid import build_grid
from thermopiezo.discretization.initial import InitialProfiles, apply_initial_conditions
from thermopiezo.discretization.state import DiscreteState
from thermopiezo.timestepper.midpoint import SimulationConfig, simulate

pytestmark = pytest.mark.slow


@pytest.fixture
def canonical_run(canonical_params, canonical_constants, static_ctrl, sine_profiles):
    g = build_grid(40, 1.0, 1.0)
    system = assemble_semidiscrete(canonical_params, g, static_ctrl)
    initial = apply_initial_conditions(sine_profiles, g, system)
    consts = canonical_constants.with_static_gains(canonical_params, 1.0, 1.0)
    traj = simulate(SimulationConfig(system=system, initial=initial, dt=1e-3, T=10.0,
                                     constants=consts, delta=1.0 / 48.0))
    return traj, consts


def test_energy_nonincreasing(canonical_run):
    """Test a nonincreasing E_h and a per-step balance within 1e-10."""
    traj, _ = canonical_run
    energy = np.asarray(traj.E_h)

    assert np.all(np.diff(energy) <= 1e-12 * energy[0])
    assert energy[-1] < energy[0]
    assert max(abs(r) for r in traj.dissipation_residual) <= 1e-10 * energy[0]


def test_certified_envelope(canonical_run, canonical_params):
    """Test E_h(t) <= 3 E_h(0) exp(-t/12) and a measured rate of at least 1/12 - 2%."""
    traj, consts = canonical_run
    report = verify_envelope(traj, consts, 1.0 / 48.0, canonical_params)

    assert report.envelope_ok
    assert report.prefactor == pytest.approx(3.0)
    fit = fit_decay_rate(traj.times, traj.E_h)
    assert fit.sigma >= (1.0 / 12.0) * 0.98


def test_thousand_random_states(canonical_params, canonical_constants, static_ctrl, rng):
    """Test the energy equivalence on 1000 random states at three multipliers."""
    g = build_grid(40, 1.0, 1.0)
    system = assemble_semidiscrete(canonical_params, g, static_ctrl)
    for fraction in (0.1, 0.5, 0.9):
        delta = fraction / canonical_constants.Mconst
        for _ in range(1000):
            s = DiscreteState.from_vector(rng.standard_normal(system.dim), system.layout)

            assert sandwich_check(s, canonical_params, g, canonical_constants, delta).passed


def test_spatial_convergence(canonical_params, static_ctrl, sine_profiles):
    """Test an observed spatial order of at least 1.5 on E_h(T) as h halves."""
    finals = []
    for n in (19, 39, 79):
        g = build_grid(n, 1.0, 1.0)
        system = assemble_semidiscrete(canonical_params, g, static_ctrl)
        initial = apply_initial_conditions(sine_profiles, g, system)
        traj = simulate(SimulationConfig(system=system, initial=initial, dt=1e-3, T=1.0))
        finals.append(traj.E_h[-1])

    order = np.log2(abs(finals[0] - finals[1]) / abs(finals[1] - finals[2]))
    assert order >= 1.5


def _beam_decay(params, ctrl, n: int) -> float:
    """Fitted rate over [0.2 T, T] for beam-dominated data, T = 10."""
    g = build_grid(n, 1.0, 1.0)
    system = assemble_semidiscrete(params, g, ctrl)
    profiles = InitialProfiles(v1=lambda x: np.sin(np.pi * x), p1=lambda x: np.sin(np.pi * x))
    initial = apply_initial_conditions(profiles, g, system)
    traj = simulate(SimulationConfig(system=system, initial=initial, dt=1e-2, T=10.0))
    return fit_decay_rate(traj.times, traj.E_h).sigma


def test_open_loop_contrast(canonical_params, static_ctrl):
    """Test that without feedback the fitted rate is below 10% of the closed-loop rate."""
    closed = _beam_decay(canonical_params, static_ctrl, 40)
    open_ = _beam_decay(canonical_params, OpenLoop(), 40)

    assert closed > 0.0
    assert open_ < 0.1 * closed


def test_measured_rate_stabilizes(canonical_params, static_ctrl):
    """Test that the fitted rate changes by less than 5% as N doubles from 20 to 80."""
    rates = [_beam_decay(canonical_params, static_ctrl, n) for n in (20, 40, 80)]

    for coarse, fine in zip(rates, rates[1:]):
        assert abs(fine - coarse) < 0.05 * abs(fine)
