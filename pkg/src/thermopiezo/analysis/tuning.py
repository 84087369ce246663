"""Static gain search maximizing the certified decay rate."""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import pandas as pd
from scipy.optimize import minimize_scalar

from thermopiezo.config.constants import (
    DEFAULT_TUNE_POINTS,
    DELTA_SAFETY_FACTOR,
    NEGLIGIBLE_RATE_FRACTION,
)
from thermopiezo.errors import EmptyFeasibleSet
from thermopiezo.model.lyapunov import LyapunovConstants, admissible_delta_static
from thermopiezo.model.material import MaterialParams

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GainBox:
    xi1_min: float
    xi1_max: float
    xi2_min: float
    xi2_max: float

    def validate(self) -> None:
        for lo, hi, name in (
            (self.xi1_min, self.xi1_max, "xi1"),
            (self.xi2_min, self.xi2_max, "xi2"),
        ):
            if not (lo > 0 and hi >= lo and math.isfinite(hi)):
                raise EmptyFeasibleSet(f"Gain box for {name} must satisfy 0 < min <= max, "
                                       f"got [{lo}, {hi}]")

    def swapped(self) -> "GainBox":
        return GainBox(self.xi2_min, self.xi2_max, self.xi1_min, self.xi1_max)


@dataclass
class TuneResult:
    xi1: float
    xi2: float
    sigma: float
    delta: float
    delta_max: float
    sigma_ceiling: float  # 2 kappa / (l1^2 M~)
    delta_star_attainable: bool
    negligible: bool
    refined: bool
    table: pd.DataFrame = field(repr=False, default_factory=pd.DataFrame)

    def to_dict(self) -> dict:
        return {
            "xi1": self.xi1,
            "xi2": self.xi2,
            "sigma": self.sigma,
            "delta": self.delta,
            "delta_max": self.delta_max,
            "sigma_ceiling": self.sigma_ceiling,
            "delta_star_attainable": self.delta_star_attainable,
            "negligible": self.negligible,
            "refined": self.refined,
        }


def gain_rate(p: MaterialParams, consts: LyapunovConstants, xi1: float, xi2: float) -> tuple:
    """(sigma, delta, delta_max) at delta = min(1/(2M), 0.99 delta_max(xi1, xi2))."""
    delta_max = admissible_delta_static(consts, p, xi1, xi2)
    delta = min(consts.delta_star, DELTA_SAFETY_FACTOR * delta_max)
    sigma = delta * (1.0 - consts.Mconst * delta) * 8.0 * consts.b1 * p.l2 * p.kappa / p.l1**2
    return sigma, delta, delta_max


def _evaluate_row(p: MaterialParams, consts: LyapunovConstants, xi1: float,
                  xi2_values: np.ndarray) -> list[dict]:
    rows = []
    for xi2 in xi2_values:
        sigma, delta, delta_max = gain_rate(p, consts, float(xi1), float(xi2))
        rows.append(
            {"xi1": float(xi1), "xi2": float(xi2), "delta_max": delta_max, "delta": delta,
             "sigma": sigma}
        )
    return rows


def _golden_refine(
    objective: Callable[[float], float], grid: np.ndarray, values: np.ndarray, index: int
) -> Optional[float]:
    """Golden-section search in log-gain around grid[index]; None on an edge or a plateau."""
    if index == 0 or index == len(grid) - 1:
        return None
    lo, mid, hi = values[index - 1], values[index], values[index + 1]
    if not (mid > lo and mid > hi):
        return None
    bracket = (math.log(grid[index - 1]), math.log(grid[index]), math.log(grid[index + 1]))
    try:
        res = minimize_scalar(lambda s: -objective(math.exp(s)), bracket=bracket,
                              method="golden")
    except ValueError as e:
        logger.debug(f"Golden refinement skipped: {e}")
        return None
    candidate = math.exp(float(res.x))
    if not grid[0] <= candidate <= grid[-1]:
        return None
    return candidate


def tune_gains(
    p: MaterialParams,
    consts: LyapunovConstants,
    box: GainBox,
    points: int = DEFAULT_TUNE_POINTS,
    workers: Optional[int] = None,
    refine: bool = True,
) -> TuneResult:
    """
    Maximize the certified rate over static gains.

    A log-spaced points x points grid is evaluated by a thread pool, one row
    of xi1 per task, and merged deterministically (ties toward smaller xi1,
    then xi2). The best grid point is then refined by golden-section search
    along each coordinate.

    Raises:
        EmptyFeasibleSet: If the box has no positive gains.
    """
    box.validate()
    if points < 2:
        raise EmptyFeasibleSet(f"Need at least 2 grid points per axis, got {points}")

    xi1_grid = np.geomspace(box.xi1_min, box.xi1_max, points)
    xi2_grid = np.geomspace(box.xi2_min, box.xi2_max, points)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_evaluate_row, p, consts, xi1, xi2_grid) for xi1 in xi1_grid]
        rows = [row for fut in futures for row in fut.result()]

    table = pd.DataFrame(rows)
    ranked = table.assign(neg_sigma=-table["sigma"]).sort_values(
        ["neg_sigma", "xi1", "xi2"], kind="mergesort"
    )
    best = ranked.iloc[0]
    xi1, xi2, sigma = float(best["xi1"]), float(best["xi2"]), float(best["sigma"])
    refined = False

    if refine:
        i = int(np.argmin(np.abs(xi1_grid - xi1)))
        j = int(np.argmin(np.abs(xi2_grid - xi2)))
        grid_sigma = table["sigma"].to_numpy().reshape(points, points)

        cand = _golden_refine(lambda a: gain_rate(p, consts, a, xi2)[0],
                              xi1_grid, grid_sigma[:, j], i)
        if cand is not None and gain_rate(p, consts, cand, xi2)[0] > sigma:
            xi1, sigma, refined = cand, gain_rate(p, consts, cand, xi2)[0], True

        column = np.array([gain_rate(p, consts, xi1, b)[0] for b in xi2_grid])
        cand = _golden_refine(lambda b: gain_rate(p, consts, xi1, b)[0], xi2_grid, column, j)
        if cand is not None and gain_rate(p, consts, xi1, cand)[0] > sigma:
            xi2, sigma, refined = cand, gain_rate(p, consts, xi1, cand)[0], True

    sigma, delta, delta_max = gain_rate(p, consts, xi1, xi2)
    ceiling = 2.0 * p.kappa / (p.l1**2 * consts.Mtilde)
    attainable = bool((DELTA_SAFETY_FACTOR * table["delta_max"] >= consts.delta_star).any())
    negligible = sigma < NEGLIGIBLE_RATE_FRACTION * ceiling

    if negligible:
        logger.warning(f"Tuned rate {sigma:.3e} is negligible; the gain box excludes useful gains")
    logger.info(
        f"Tuned gains: xi1={xi1:.6g}, xi2={xi2:.6g}, sigma={sigma:.6g} "
        f"(ceiling {ceiling:.6g}, delta* attainable: {attainable})"
    )
    return TuneResult(
        xi1=xi1,
        xi2=xi2,
        sigma=sigma,
        delta=delta,
        delta_max=delta_max,
        sigma_ceiling=ceiling,
        delta_star_attainable=attainable,
        negligible=negligible,
        refined=refined,
        table=table[["xi1", "xi2", "delta_max", "delta", "sigma"]],
    )
