"""Tests for the boundary feedback laws."""

import numpy as np
import pytest

from thermopiezo.controllers.feedback import (
    ControllerKind,
    HybridFeedback,
    OpenLoop,
    ScalarDynamic,
    StaticFeedback,
    boundary_force,
    boundary_law,
    controller_rhs,
    initial_controller_state,
    scalar_to_hybrid,
)
from thermopiezo.errors import AssumptionsFailed, ConfigValidationError, DimensionMismatch


class TestBoundaryForce:
    """Test suite for boundary_force."""

    def test_static(self):
        """Test (g1, g2) = (-1, 3) for xi = (2, 3), w1 = 0.5, w2 = -1."""
        g = boundary_force(StaticFeedback(xi1=2.0, xi2=3.0), 0.5, -1.0, np.zeros(0))

        assert g == pytest.approx((-1.0, 3.0))

    def test_hybrid_current_term(self, remark_ctrl: HybridFeedback):
        """Test g2 = -c^T q when d = 0."""
        _, g2 = boundary_force(remark_ctrl, 0.0, 123.0, np.array([0.2]))

        assert g2 == pytest.approx(-0.2)

    def test_open_loop(self):
        """Test that the open loop applies no force."""
        assert boundary_force(OpenLoop(), 1.0, 1.0, np.zeros(0)) == (0.0, 0.0)

    def test_scalar(self, scalar_ctrl: ScalarDynamic):
        """Test g2 = -p for the scalar controller."""
        assert boundary_force(scalar_ctrl, 1.0, 5.0, np.array([0.7])) == pytest.approx(
            (-1.0, -0.7)
        )

    def test_wrong_state_length(self, remark_ctrl: HybridFeedback):
        """Test that q of the wrong size is rejected."""
        with pytest.raises(DimensionMismatch):
            boundary_force(remark_ctrl, 0.0, 0.0, np.zeros(2))


class TestControllerRhs:
    """Test suite for controller_rhs."""

    def test_hybrid(self, remark_ctrl: HybridFeedback):
        """Test A q + b w2 = -0.2 + 0.5 = 0.3."""
        assert controller_rhs(remark_ctrl, np.array([0.2]), 0.5) == pytest.approx([0.3])

    def test_scalar(self):
        """Test -q + xi2 w2 = -1 for xi2 = 2, q = 1, w2 = 0."""
        assert controller_rhs(ScalarDynamic(xi2=2.0), np.array([1.0]), 0.0) == pytest.approx(
            [-1.0]
        )

    def test_equilibrium(self, hybrid2_ctrl: HybridFeedback):
        """Test that q = 0, w2 = 0 is an equilibrium."""
        np.testing.assert_array_equal(controller_rhs(hybrid2_ctrl, np.zeros(2), 0.0), 0.0)

    def test_static_has_no_state(self, static_ctrl: StaticFeedback):
        """Test that a static controller has no dynamics."""
        with pytest.raises(DimensionMismatch):
            controller_rhs(static_ctrl, np.zeros(0), 0.0)  # type: ignore[arg-type]


class TestScalarToHybrid:
    """Test suite for scalar_to_hybrid."""

    def test_unit_gain(self):
        """Test Scalar(xi2=1, eta=0) -> Hybrid([-1], [1], [1], 0, 0, [0])."""
        h = scalar_to_hybrid(ScalarDynamic(xi2=1.0, eta=0.0))

        np.testing.assert_array_equal(h.A, [[-1.0]])
        np.testing.assert_array_equal(h.b, [1.0])
        np.testing.assert_array_equal(h.c, [1.0])
        assert h.d == 0.0 and h.gamma == 0.0
        np.testing.assert_array_equal(h.zeta, [0.0])

    def test_same_forces(self):
        """Test that the image applies the same boundary forces and dynamics."""
        s = ScalarDynamic(xi2=2.5, eta=0.4, xi1=3.0)
        h = scalar_to_hybrid(s)
        q = np.array([0.4])

        assert boundary_force(h, 0.3, -0.2, q) == pytest.approx(boundary_force(s, 0.3, -0.2, q))
        assert controller_rhs(h, q, -0.2) == pytest.approx(controller_rhs(s, q, -0.2))
        np.testing.assert_array_equal(initial_controller_state(h), initial_controller_state(s))

    def test_agrees_on_random_states(self, rng):
        """Test g2 = -q and q' = -q + xi2 w2 for the image on 1000 random pairs."""
        s = ScalarDynamic(xi2=1.7, eta=0.0, xi1=0.6)
        h = scalar_to_hybrid(s)
        for q0, w1, w2 in rng.normal(scale=3.0, size=(1000, 3)):
            q = np.array([q0])

            g1, g2 = boundary_force(h, w1, w2, q)
            assert g1 == pytest.approx(-0.6 * w1, rel=1e-14, abs=1e-14)
            assert g2 == pytest.approx(-q0, rel=1e-14, abs=1e-14)
            assert controller_rhs(h, q, w2)[0] == pytest.approx(-q0 + 1.7 * w2, rel=1e-12,
                                                                abs=1e-12)


class TestControllerValidation:
    """Test suite for controller construction."""

    def test_static_zero_gain(self):
        """Test that xi1 = 0 is rejected."""
        with pytest.raises(ConfigValidationError):
            StaticFeedback(xi1=0.0, xi2=1.0)

    def test_hybrid_shapes(self):
        """Test that b of the wrong length is rejected."""
        with pytest.raises(DimensionMismatch, match="b"):
            HybridFeedback(A=-np.eye(2), b=[1.0], c=[1.0, 0.0], d=0.0, gamma=0.0,
                           zeta=[0.0, 0.0])

    def test_d_below_margin(self):
        """Test that d < Gamma fails the assumptions."""
        with pytest.raises(AssumptionsFailed):
            HybridFeedback(A=[[-1.0]], b=[1.0], c=[1.0], d=0.1, gamma=0.5, zeta=[0.0])

    def test_boundary_law(self, static_ctrl, hybrid2_ctrl):
        """Test the common linear form of each controller."""
        assert boundary_law(OpenLoop()).xi1 == 0.0
        assert boundary_law(static_ctrl).d == static_ctrl.xi2
        assert boundary_law(hybrid2_ctrl).n == 2

    def test_kinds(self, static_ctrl, scalar_ctrl, remark_ctrl):
        """Test the kind tags used in reports."""
        assert OpenLoop().kind == ControllerKind.OPEN_LOOP
        assert static_ctrl.to_dict()["kind"] == "static"
        assert scalar_ctrl.kind == ControllerKind.SCALAR
        assert remark_ctrl.to_dict()["Gamma"] == 0.0
