"""Measured decay rates and the exponential envelope check."""

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, NamedTuple, Optional, Sequence

import numpy as np

from thermopiezo.config.constants import DEFAULT_FIT_WINDOW, ENVELOPE_SLACK, MIN_FIT_SAMPLES
from thermopiezo.controllers.feedback import ControllerKind
from thermopiezo.errors import NonpositiveEnergy, NumericalError, WindowTooShort
from thermopiezo.model.lyapunov import LyapunovConstants, decay_rate
from thermopiezo.model.material import MaterialParams

if TYPE_CHECKING:
    from thermopiezo.analysis.hybrid import HybridDeltaBound
    from thermopiezo.timestepper.midpoint import Trajectory

logger = logging.getLogger(__name__)


class DecayFit(NamedTuple):
    sigma: float
    residual: float  # RMS of log E about the fitted line
    window: tuple[float, float]
    samples: int


def fit_decay_rate(
    times: Sequence[float],
    energies: Sequence[float],
    window: Optional[tuple[float, float]] = None,
) -> DecayFit:
    """
    Least-squares slope of log E against t.

    Args:
        times: Sample times.
        energies: Energy samples, positive on the window.
        window: (t_start, t_end); defaults to [0.2 T, T] with T the last time.

    Raises:
        WindowTooShort: Fewer than 10 samples inside the window.
        NonpositiveEnergy: An energy sample in the window is <= 0.
    """
    t = np.asarray(times, dtype=float)
    e = np.asarray(energies, dtype=float)
    if window is None:
        end = float(t[-1]) if len(t) else 0.0
        window = (DEFAULT_FIT_WINDOW[0] * end, DEFAULT_FIT_WINDOW[1] * end)

    mask = (t >= window[0]) & (t <= window[1])
    count = int(np.count_nonzero(mask))
    if count < MIN_FIT_SAMPLES:
        raise WindowTooShort(count, MIN_FIT_SAMPLES)
    if np.any(~(e[mask] > 0)):
        raise NonpositiveEnergy(f"Energy must be positive on the fit window {window}")

    slope, intercept = np.polyfit(t[mask], np.log(e[mask]), 1)
    fitted = slope * t[mask] + intercept
    residual = float(np.sqrt(np.mean((np.log(e[mask]) - fitted) ** 2)))
    return DecayFit(sigma=0.0 - float(slope), residual=residual, window=window, samples=count)


@dataclass
class DecayReport:
    """Envelope verdict and fitted rate for one trajectory."""

    status: str  # ok | violated | mode_mismatch | not_certified
    sigma_measured: Optional[float]
    sigma_theory: Optional[float]
    prefactor: Optional[float]
    delta: Optional[float]
    envelope_ok: Optional[bool]
    margin: Optional[float]  # min over samples of log(envelope) - log(E)
    fit_window: Optional[tuple[float, float]]
    fit_residual: Optional[float]
    energy_column: str
    messages: list[str] = field(default_factory=list)

    @property
    def applicable(self) -> bool:
        return self.status in ("ok", "violated")

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "envelope_ok": self.envelope_ok,
            "sigma_measured": self.sigma_measured,
            "sigma_theory": self.sigma_theory,
            "prefactor": self.prefactor,
            "delta": self.delta,
            "margin": self.margin,
            "fit_window": list(self.fit_window) if self.fit_window else None,
            "fit_residual": self.fit_residual,
            "energy_column": self.energy_column,
            "messages": list(self.messages),
        }


def _measured(times: np.ndarray, energy: np.ndarray,
              window: Optional[tuple[float, float]], messages: list[str]) -> Optional[DecayFit]:
    try:
        return fit_decay_rate(times, energy, window)
    except NumericalError as e:
        messages.append(f"decay fit unavailable: {e}")
        return None


def verify_envelope(
    traj: "Trajectory",
    consts: LyapunovConstants,
    delta: Optional[float],
    p: MaterialParams,
    hybrid_bound: Optional["HybridDeltaBound"] = None,
    window: Optional[tuple[float, float]] = None,
) -> DecayReport:
    """
    Check E(t) <= (1+M delta)/(1-M delta) exp(-sigma t) E(0) at every sample.

    Static runs use E_h and consts.delta_max. Scalar and hybrid runs use
    E_hybrid and the hybrid bound; without a positive bound the case is
    reported as not certified. Open-loop runs report a mode mismatch.

    Raises:
        DeltaOutOfRange: If delta is not admissible for a static run.
    """
    times = np.asarray(traj.times, dtype=float)
    messages: list[str] = []
    kind = ControllerKind(traj.controller_kind)
    dynamic = kind in (ControllerKind.SCALAR, ControllerKind.HYBRID)
    column = "E_hybrid" if dynamic else "E_h"
    energy = traj.energy if dynamic else np.asarray(traj.E_h, dtype=float)
    fit = _measured(times, energy, window, messages)

    def report(status: str, **kwargs: object) -> DecayReport:
        base: dict = dict(
            status=status,
            sigma_measured=fit.sigma if fit else None,
            sigma_theory=None,
            prefactor=None,
            delta=None,
            envelope_ok=None,
            margin=None,
            fit_window=fit.window if fit else None,
            fit_residual=fit.residual if fit else None,
            energy_column=column,
            messages=messages,
        )
        base.update(kwargs)
        return DecayReport(**base)

    if kind == ControllerKind.OPEN_LOOP:
        messages.append("envelope applies to feedback-controlled runs only")
        return report("mode_mismatch")

    if dynamic:
        if hybrid_bound is None or hybrid_bound.bound <= 0.0:
            messages.append("hybrid rate not certified (no positive delta bound)")
            return report("not_certified")
        consts = consts.with_delta_max(p, hybrid_bound.bound)

    if delta is None:
        delta = consts.default_delta
    rate = decay_rate(consts, p, delta)

    envelope = rate.prefactor * energy[0] * np.exp(-rate.sigma * times)
    ok = bool(np.all(energy <= envelope + ENVELOPE_SLACK))
    positive = energy > 0
    margin = (
        float(np.min(np.log(envelope[positive]) - np.log(energy[positive])))
        if np.any(positive)
        else None
    )
    if not ok:
        worst = int(np.argmax(energy - envelope))
        messages.append(
            f"envelope exceeded at t={times[worst]:.6g}: E={energy[worst]:.6g} > "
            f"{envelope[worst]:.6g}"
        )
        logger.warning(messages[-1])

    return report(
        "ok" if ok else "violated",
        sigma_theory=rate.sigma,
        prefactor=rate.prefactor,
        delta=delta,
        envelope_ok=ok,
        margin=margin,
    )
