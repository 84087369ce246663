"""Hurwitz, Kalman rank and positive-real checks for hybrid controllers."""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from thermopiezo.config.constants import FREQ_SWEEP_MAX, FREQ_SWEEP_MIN, FREQ_SWEEP_POINTS
from thermopiezo.controllers.feedback import HybridFeedback

logger = logging.getLogger(__name__)


def default_frequency_grid() -> np.ndarray:
    return np.logspace(np.log10(FREQ_SWEEP_MIN), np.log10(FREQ_SWEEP_MAX), FREQ_SWEEP_POINTS)


def controllability_matrix(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """[b, Ab, ..., A^{n-1} b]."""
    n = A.shape[0]
    cols = [b]
    for _ in range(n - 1):
        cols.append(A @ cols[-1])
    return np.column_stack(cols)


def frequency_response(ctrl: HybridFeedback, freqs: np.ndarray) -> np.ndarray:
    """c^T (i s I - A)^{-1} b for every s in freqs; nan where i s is an eigenvalue of A."""
    n = ctrl.n
    eye = np.eye(n)
    pencils = 1j * freqs[:, None, None] * eye[None, :, :] - ctrl.A[None, :, :]
    rhs = ctrl.b.astype(complex)
    try:
        solved = np.linalg.solve(pencils, np.broadcast_to(rhs, (len(freqs), n))[..., None])
        return solved[..., 0] @ ctrl.c
    except np.linalg.LinAlgError:
        out = np.full(len(freqs), np.nan, dtype=complex)
        for k, pencil in enumerate(pencils):
            try:
                out[k] = np.linalg.solve(pencil, rhs) @ ctrl.c
            except np.linalg.LinAlgError:
                logger.debug(f"Resolvent singular at s={freqs[k]:.6g}")
        return out


@dataclass
class AssumptionReport:
    """Outcome of the three hybrid-controller assumptions."""

    hurwitz: bool
    spectral_abscissa: float
    controllable: bool
    controllability_rank: int
    observable: bool
    observability_rank: int
    positive_real: bool
    positive_real_margin: float  # inf over the grid, s = 0 and the asymptote
    finite_margin: float  # inf over the grid and s = 0 only
    margin_at_zero: float
    asymptotic_margin: float
    n: int
    freq_grid: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0))
    warnings: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.hurwitz and self.controllable and self.observable and self.positive_real

    @property
    def failures(self) -> list[str]:
        out = []
        if not self.hurwitz:
            out.append(f"A is not Hurwitz (spectral abscissa {self.spectral_abscissa:.6g})")
        if not self.controllable:
            out.append(f"(A, b) not controllable (rank {self.controllability_rank} < {self.n})")
        if not self.observable:
            out.append(f"(A, c) not observable (rank {self.observability_rank} < {self.n})")
        if not self.positive_real:
            out.append(f"Positive-real margin violated (margin {self.positive_real_margin:.6g})")
        return out

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "hurwitz": self.hurwitz,
            "spectral_abscissa": self.spectral_abscissa,
            "controllable": self.controllable,
            "controllability_rank": self.controllability_rank,
            "observable": self.observable,
            "observability_rank": self.observability_rank,
            "positive_real": self.positive_real,
            "positive_real_margin": self.positive_real_margin,
            "finite_margin": self.finite_margin,
            "margin_at_zero": self.margin_at_zero,
            "asymptotic_margin": self.asymptotic_margin,
            "frequency_points": int(len(self.freq_grid)),
            "frequency_range": [float(self.freq_grid.min()), float(self.freq_grid.max())]
            if len(self.freq_grid)
            else [],
            "warnings": list(self.warnings),
        }


def check_hybrid_assumptions(
    ctrl: HybridFeedback, freq_grid: Optional[np.ndarray] = None
) -> AssumptionReport:
    """
    Check the hybrid controller assumptions without raising.

    Args:
        ctrl: Hybrid controller.
        freq_grid: Positive frequencies for the positive-real sweep; defaults
            to 400 log-spaced points on [1e-4, 1e4].

    Returns:
        Report with one flag per assumption and the sweep margins.
    """
    freqs = default_frequency_grid() if freq_grid is None else np.asarray(freq_grid, dtype=float)
    n = ctrl.n

    eigs = np.linalg.eigvals(ctrl.A)
    abscissa = float(np.max(eigs.real))
    ctrb_rank = int(np.linalg.matrix_rank(controllability_matrix(ctrl.A, ctrl.b)))
    obsv_rank = int(np.linalg.matrix_rank(controllability_matrix(ctrl.A.T, ctrl.c)))

    sweep = np.concatenate([[0.0], freqs])
    real_part = ctrl.d + frequency_response(ctrl, sweep).real - ctrl.gamma
    margin_at_zero = float(real_part[0])
    # a resolvent pole on the imaginary axis rules out positive realness
    finite_margin = float(np.min(real_part)) if np.all(np.isfinite(real_part)) else -np.inf
    asymptotic_margin = ctrl.d - ctrl.gamma

    warnings: list[str] = []
    if asymptotic_margin == 0.0 and finite_margin > 0.0:
        warnings.append("positive-real margin is non-strict at infinity (d = Gamma)")
    if ctrl.gamma == 0.0:
        warnings.append("Gamma = 0: no dissipation on the current trace, hybrid rate not certified")
    for w in warnings:
        logger.warning(f"Hybrid controller: {w}")

    report = AssumptionReport(
        hurwitz=abscissa < 0.0,
        spectral_abscissa=abscissa,
        controllable=ctrb_rank == n,
        controllability_rank=ctrb_rank,
        observable=obsv_rank == n,
        observability_rank=obsv_rank,
        positive_real=finite_margin > 0.0 and asymptotic_margin >= 0.0,
        positive_real_margin=min(finite_margin, asymptotic_margin),
        finite_margin=finite_margin,
        margin_at_zero=margin_at_zero,
        asymptotic_margin=asymptotic_margin,
        n=n,
        freq_grid=freqs,
        warnings=warnings,
    )
    logger.debug(f"Assumption report: {report.to_dict()}")
    return report
