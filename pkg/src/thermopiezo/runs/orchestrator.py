"""Orchestration of the CLI subcommands."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np
import pandas as pd

from thermopiezo.analysis.decay import DecayReport, fit_decay_rate, verify_envelope
from thermopiezo.analysis.functional import sandwich_check
from thermopiezo.analysis.hybrid import HybridDeltaBound, admissible_delta_hybrid
from thermopiezo.analysis.tuning import GainBox, tune_gains
from thermopiezo.config.constants import (
    BALANCE_REL_TOL,
    CERTIFICATE_FILE,
    CONSTANTS_FILE,
    REPORT_FILE,
    SNAPSHOT_FILE,
    TRAJECTORY_FILE,
    TUNE_FILE,
    VERIFY_DELTA_FRACTIONS,
    VERIFY_FILE,
    VERIFY_SANDWICH_STATES,
    ExitCode,
)
from thermopiezo.config.settings import AppSettings, RunConfig, get_settings, parse_config
from thermopiezo.controllers.assumptions import check_hybrid_assumptions
from thermopiezo.controllers.feedback import (
    ControllerKind,
    ControllerSpec,
    HybridFeedback,
    ScalarDynamic,
    StaticFeedback,
    scalar_to_hybrid,
)
from thermopiezo.controllers.mky import (
    MkyCertificate,
    MkyVerification,
    export_certificate,
    load_certificate,
    solve_mky,
    verify_mky,
)
from thermopiezo.discretization.assembly import assemble_semidiscrete
from thermopiezo.discretization.energy import field_energy
from thermopiezo.discretization.initial import apply_initial_conditions
from thermopiezo.discretization.state import DiscreteState
from thermopiezo.errors import (
    AssumptionsFailed,
    CertificateRequired,
    ConfigValidationError,
    NumericalError,
)
from thermopiezo.model.lyapunov import (
    LyapunovConstants,
    compute_lyapunov_constants,
    decay_rate,
    max_decay_rate,
)
from thermopiezo.model.material import derive_matrices, wave_speeds
from thermopiezo.runs.profiles import profiles_from_config
from thermopiezo.runs.reports import (
    dump_yaml,
    evaluate_invariants,
    read_trajectory,
    read_yaml,
    verdicts_passed,
    write_trajectory,
    write_yaml,
)
from thermopiezo.timestepper.midpoint import (
    SimulationConfig,
    Trajectory,
    default_time_step,
    simulate,
)
from thermopiezo.utils.logging import log_banner

logger = logging.getLogger(__name__)

SUBCOMMANDS = ("simulate", "constants", "check-controller", "tune", "verify")


@dataclass
class ControllerSetup:
    """Controller plus, for dynamic controllers, its certificate and delta bound."""

    law: ControllerSpec
    hybrid: Optional[HybridFeedback] = None
    certificate: Optional[MkyCertificate] = None
    verification: Optional[MkyVerification] = None
    bound: Optional[HybridDeltaBound] = None

    @property
    def P(self) -> Optional[np.ndarray]:
        return None if self.certificate is None else self.certificate.P


@dataclass
class SimulationOutcome:
    trajectory: Trajectory
    frame: pd.DataFrame
    decay: DecayReport
    verdicts: dict[str, Optional[bool]]
    delta: float
    dt: float


def config_from_report(out_dir: Union[str, Path]) -> RunConfig:
    """Re-parse the effective configuration embedded in a stored run report."""
    report = read_yaml(Path(out_dir) / REPORT_FILE)
    if "config" not in report:
        raise ConfigValidationError(f"{Path(out_dir) / REPORT_FILE} has no embedded config")
    return parse_config(dump_yaml(report["config"]))


class RunOrchestrator:
    """Runs one subcommand against a parsed configuration and writes its artifacts."""

    def __init__(
        self,
        cfg: RunConfig,
        out_dir: Optional[Union[str, Path]] = None,
        settings: Optional[AppSettings] = None,
        seed: int = 0,
        base_dir: Optional[Path] = None,
    ):
        self.cfg = cfg
        self.settings = settings or get_settings()
        self.out_dir = Path(out_dir or cfg.output.directory or self.settings.output_root)
        self.seed = seed
        self.base_dir = base_dir
        self._init_components()

    def _init_components(self) -> None:
        """Parameters, grid and closed-form constants shared by every subcommand."""
        self.params = self.cfg.params()
        self.grid = self.cfg.build_grid()
        self.closure = self.cfg.grid.closure
        self.constants = compute_lyapunov_constants(self.params, self.cfg.lyapunov.b1)
        self.delta_request = (
            None if self.cfg.lyapunov.delta == "auto" else float(self.cfg.lyapunov.delta)
        )

    def run(self, subcommand: str) -> ExitCode:
        handlers: dict[str, Callable[[], ExitCode]] = {
            "simulate": self.simulate,
            "constants": self.constants_table,
            "check-controller": self.check_controller,
            "tune": self.tune,
            "verify": self.verify,
        }
        if subcommand not in handlers:
            raise ConfigValidationError(f"Unknown subcommand {subcommand!r}")

        log_banner(logger, f"{subcommand.upper()}  ->  {self.out_dir}")
        self.out_dir.mkdir(parents=True, exist_ok=True)
        return handlers[subcommand]()

    # --- controller -------------------------------------------------------

    def _certificate(self, hybrid: HybridFeedback) -> MkyCertificate:
        path = self.cfg.controller.certificate
        if path:
            cert_path = Path(path)
            if not cert_path.is_absolute() and self.base_dir is not None:
                cert_path = self.base_dir / cert_path
            logger.info(f"Loading MKY certificate from {cert_path}")
            return load_certificate(cert_path)
        return solve_mky(hybrid, self.cfg.controller.weight_matrix())

    def setup_controller(self, law: Optional[ControllerSpec] = None) -> ControllerSetup:
        law = law or self.cfg.controller.build()
        if not isinstance(law, (ScalarDynamic, HybridFeedback)):
            return ControllerSetup(law=law)

        hybrid = scalar_to_hybrid(law) if isinstance(law, ScalarDynamic) else law
        cert = self._certificate(hybrid)
        verification = verify_mky(hybrid, cert)
        if not verification.passed:
            raise CertificateRequired(
                f"MKY certificate does not verify: {'; '.join(verification.messages)}"
            )
        bound = admissible_delta_hybrid(self.constants, self.params, hybrid, cert)
        return ControllerSetup(law, hybrid, cert, verification, bound)

    def _run_constants(self, setup: ControllerSetup) -> LyapunovConstants:
        """Constants whose delta_max reflects the active controller."""
        law = setup.law
        if isinstance(law, StaticFeedback):
            return self.constants.with_static_gains(self.params, law.xi1, law.xi2)
        if setup.bound is not None and setup.bound.certified:
            return self.constants.with_delta_max(self.params, setup.bound.bound)
        return self.constants

    # --- simulate ---------------------------------------------------------

    def run_simulation(
        self, setup: ControllerSetup, keep_states: bool = False
    ) -> SimulationOutcome:
        p, grid = self.params, self.grid
        system = assemble_semidiscrete(p, grid, setup.law, self.closure)
        profiles = profiles_from_config(self.cfg.initial, p, self.base_dir)
        initial = apply_initial_conditions(profiles, grid, system)

        consts = self._run_constants(setup)
        delta = self.delta_request if self.delta_request is not None else consts.default_delta
        if setup.law.kind == ControllerKind.STATIC:
            decay_rate(consts, p, delta)

        dt_cfg = self.cfg.time.dt
        dt = default_time_step(p, grid) if dt_cfg == "auto" else float(dt_cfg)
        traj = simulate(
            SimulationConfig(
                system=system,
                initial=initial,
                dt=dt,
                T=self.cfg.time.T,
                record_every=self.cfg.time.record_every,
                P=setup.P,
                constants=consts,
                delta=delta if delta < 1.0 / consts.Mconst else None,
                keep_states=keep_states,
            )
        )
        decay = verify_envelope(
            traj,
            consts if setup.law.kind == ControllerKind.STATIC else self.constants,
            self.delta_request,
            p,
            hybrid_bound=setup.bound,
        )
        frame = traj.to_frame()
        envelope = (decay.prefactor, decay.sigma_theory) if decay.applicable else None
        verdicts = evaluate_invariants(frame, envelope=envelope)
        return SimulationOutcome(traj, frame, decay, verdicts, delta, traj.dt)

    def simulate(self) -> ExitCode:
        setup = self.setup_controller()
        if setup.certificate is not None:
            export_certificate(setup.certificate, self.out_dir / CERTIFICATE_FILE)

        outcome = self.run_simulation(setup, keep_states=self.cfg.output.snapshots)
        write_trajectory(outcome.frame, self.out_dir / TRAJECTORY_FILE)
        if self.cfg.output.snapshots:
            write_yaml(
                {"states": [s.to_dict() for s in outcome.trajectory.states]},
                self.out_dir / SNAPSHOT_FILE,
            )

        traj = outcome.trajectory
        report = {
            "subcommand": "simulate",
            "config": self.cfg.to_dict(),
            "controller": setup.law.to_dict(),
            "constants": self._run_constants(setup).to_dict(),
            "run": {
                "dt": outcome.dt,
                "steps": traj.steps,
                "samples": traj.samples,
                "delta": outcome.delta,
                "max_energy_increase": traj.max_energy_increase,
                "max_constraint_residual": traj.max_constraint_residual,
            },
            "decay": outcome.decay.to_dict(),
            "certificate": setup.verification.to_dict() if setup.verification else None,
            "hybrid_delta_bound": setup.bound.to_dict() if setup.bound else None,
            "verdicts": outcome.verdicts,
        }
        write_yaml(report, self.out_dir / REPORT_FILE)

        decay = outcome.decay
        logger.info(f"Energy: {traj.E_h[0]:.6g} -> {traj.E_h[-1]:.6g} over {traj.steps} steps")
        if decay.sigma_measured is not None:
            logger.info(f"Measured decay rate: {decay.sigma_measured:.6g} "
                        f"(certified: {decay.sigma_theory})")
        logger.info(f"Verdicts: {outcome.verdicts}")
        return ExitCode.OK if verdicts_passed(outcome.verdicts) else ExitCode.FAILURE

    # --- constants --------------------------------------------------------

    def constants_table(self) -> ExitCode:
        p, consts = self.params, self.constants
        best = max_decay_rate(consts, p)
        rate = decay_rate(consts, p, consts.delta_star)
        matrices = derive_matrices(p)
        table: dict = {
            "subcommand": "constants",
            "config": self.cfg.to_dict(),
            "parameters": p.to_dict(),
            "constants": consts.to_dict(),
            "sigma_max": best.sigma_max,
            "prefactor_at_delta_star": rate.prefactor,
            "wave_speeds": wave_speeds(p),
            "M2": matrices.M2,
            "A2": matrices.A2,
        }
        ctrl = self.cfg.controller
        if ctrl.kind == ControllerKind.STATIC:
            gained = consts.with_static_gains(p, ctrl.xi1, ctrl.xi2)
            table["static"] = {
                "xi1": ctrl.xi1,
                "xi2": ctrl.xi2,
                "delta_max": gained.delta_max,
                "delta": gained.default_delta,
                "sigma": gained.sigma,
                "delta_star_attainable": max_decay_rate(consts, p, ctrl.xi1, ctrl.xi2).attainable,
            }
        write_yaml(table, self.out_dir / CONSTANTS_FILE)
        logger.info(f"a1={consts.a1:.6g}  M~={consts.Mtilde:.6g}  M={consts.Mconst:.6g}  "
                    f"delta*={consts.delta_star:.6g}  sigma_max={best.sigma_max:.6g}")
        return ExitCode.OK

    # --- check-controller -------------------------------------------------

    def check_controller(self) -> ExitCode:
        law = self.cfg.controller.build()
        if not isinstance(law, (ScalarDynamic, HybridFeedback)):
            raise ConfigValidationError(
                f"check-controller needs a scalar or hybrid controller, got {law.kind.value}"
            )
        hybrid = scalar_to_hybrid(law) if isinstance(law, ScalarDynamic) else law
        assumptions = check_hybrid_assumptions(hybrid)
        report: dict = {
            "subcommand": "check-controller",
            "config": self.cfg.to_dict(),
            "controller": hybrid.to_dict(),
            "assumptions": assumptions.to_dict(),
        }
        if not assumptions.passed:
            write_yaml(report, self.out_dir / REPORT_FILE)
            raise AssumptionsFailed("; ".join(assumptions.failures), report=assumptions)

        cert = self._certificate(hybrid)
        verification = verify_mky(hybrid, cert)
        report["certificate"] = cert.to_dict()
        report["verification"] = verification.to_dict()
        if verification.passed:
            bound = admissible_delta_hybrid(self.constants, self.params, hybrid, cert)
            report["hybrid_delta_bound"] = bound.to_dict()
            export_certificate(cert, self.out_dir / CERTIFICATE_FILE)
        write_yaml(report, self.out_dir / REPORT_FILE)

        if not verification.passed:
            raise CertificateRequired(
                f"MKY certificate does not verify: {'; '.join(verification.messages)}"
            )
        logger.info(f"Certificate: P={cert.P.tolist()}, q1={cert.q1.tolist()}, "
                    f"Delta={cert.Delta:.6g}")
        return ExitCode.OK

    # --- tune -------------------------------------------------------------

    def _confirm(self, xi1: float, xi2: float) -> dict:
        setup = ControllerSetup(law=StaticFeedback(xi1=xi1, xi2=xi2))
        outcome = self.run_simulation(setup)
        return {
            "xi1": xi1,
            "xi2": xi2,
            "sigma_theory": outcome.decay.sigma_theory,
            "sigma_measured": outcome.decay.sigma_measured,
            "envelope_ok": outcome.decay.envelope_ok,
        }

    def tune(self) -> ExitCode:
        section = self.cfg.tune
        box = GainBox(section.xi1_min, section.xi1_max, section.xi2_min, section.xi2_max)
        workers = section.workers or self.settings.workers
        result = tune_gains(self.params, self.constants, box, section.points, workers,
                            section.refine)
        result.table.to_csv(self.out_dir / TUNE_FILE, index=False, float_format="%.17g")

        confirmed: list[dict] = []
        if section.confirm_top:
            ranked = result.table.sort_values(["sigma", "xi1", "xi2"],
                                              ascending=[False, True, True], kind="mergesort")
            top = ranked.head(section.confirm_top)
            pairs = list(zip(top["xi1"].astype(float), top["xi2"].astype(float)))
            logger.info(f"Confirming {len(pairs)} candidate gain pairs by simulation")
            with ThreadPoolExecutor(max_workers=workers) as pool:
                confirmed = list(pool.map(lambda pair: self._confirm(*pair), pairs))
            confirmed.sort(key=lambda row: (row["xi1"], row["xi2"]))

        write_yaml(
            {
                "subcommand": "tune",
                "config": self.cfg.to_dict(),
                "box": {"xi1": [box.xi1_min, box.xi1_max], "xi2": [box.xi2_min, box.xi2_max]},
                "optimum": result.to_dict(),
                "confirmed": confirmed,
            },
            self.out_dir / REPORT_FILE,
        )
        return ExitCode.OK

    # --- verify -----------------------------------------------------------

    def _sandwich_states(self) -> dict:
        """Sandwich inequality on seeded random states at several delta fractions."""
        layout_system = assemble_semidiscrete(self.params, self.grid,
                                              self.cfg.controller.build(), self.closure)
        layout = layout_system.layout
        rng = np.random.default_rng(self.seed)
        failures = 0
        worst = np.inf
        for fraction in VERIFY_DELTA_FRACTIONS:
            delta = fraction / self.constants.Mconst
            for _ in range(VERIFY_SANDWICH_STATES):
                state = DiscreteState.from_vector(rng.standard_normal(layout.dim), layout)
                check = sandwich_check(state, self.params, self.grid, self.constants, delta,
                                       self.closure)
                worst = min(worst, check.lower_margin, check.upper_margin)
                failures += not check.passed
        return {
            "seed": self.seed,
            "states": VERIFY_SANDWICH_STATES * len(VERIFY_DELTA_FRACTIONS),
            "failures": failures,
            "worst_margin": float(worst),
            "passed": failures == 0,
        }

    def _snapshot_energies(self, frame: pd.DataFrame) -> Optional[dict]:
        """Recompute E_h from stored snapshots and compare with the trajectory rows."""
        path = self.out_dir / SNAPSHOT_FILE
        if not path.exists():
            return None
        states = [DiscreteState.from_dict(d) for d in read_yaml(path).get("states", [])]
        times = frame["t"].to_numpy()
        energies = frame["E_h"].to_numpy()

        worst = 0.0
        for state in states:
            row = int(np.argmin(np.abs(times - state.t)))
            recomputed = field_energy(state, self.params, self.grid, self.closure)
            worst = max(worst, abs(recomputed - float(energies[row])))
        scale = max(float(np.max(energies)), 1.0) if len(energies) else 1.0
        return {
            "count": len(states),
            "rows": len(frame),
            "max_energy_error": worst,
            "passed": len(states) == len(frame) and worst <= BALANCE_REL_TOL * scale,
        }

    def verify(self) -> ExitCode:
        stored = read_yaml(self.out_dir / REPORT_FILE)
        if stored.get("subcommand") != "simulate":
            raise ConfigValidationError(f"{self.out_dir / REPORT_FILE} is not a simulate report")
        frame = read_trajectory(self.out_dir / TRAJECTORY_FILE)

        decay = stored.get("decay") or {}
        envelope = None
        if decay.get("status") in ("ok", "violated"):
            envelope = (float(decay["prefactor"]), float(decay["sigma_theory"]))
        verdicts = evaluate_invariants(frame, envelope=envelope)
        expected = stored.get("verdicts", {})
        mismatches = sorted(k for k in verdicts if expected.get(k) != verdicts[k])

        result: dict = {
            "subcommand": "verify",
            "verdicts": verdicts,
            "stored_verdicts": expected,
            "mismatches": mismatches,
            "sandwich": self._sandwich_states(),
        }
        snapshots = self._snapshot_energies(frame)
        if snapshots is not None:
            result["snapshots"] = snapshots

        try:
            energy = frame["E_hybrid"] if frame["E_hybrid"].notna().any() else frame["E_h"]
            fit = fit_decay_rate(frame["t"].to_numpy(), energy.to_numpy())
            result["sigma_measured"] = fit.sigma
        except NumericalError as e:
            result["sigma_measured"] = None
            logger.info(f"No decay fit on stored trajectory: {e}")

        cert_path = self.out_dir / CERTIFICATE_FILE
        law = self.cfg.controller.build()
        if cert_path.exists() and isinstance(law, (ScalarDynamic, HybridFeedback)):
            hybrid = scalar_to_hybrid(law) if isinstance(law, ScalarDynamic) else law
            result["certificate"] = verify_mky(hybrid, load_certificate(cert_path)).to_dict()

        write_yaml(result, self.out_dir / VERIFY_FILE)
        ok = (
            not mismatches
            and verdicts_passed(verdicts)
            and result["sandwich"]["passed"]
            and result.get("certificate", {"passed": True})["passed"]
            and result.get("snapshots", {"passed": True})["passed"]
        )
        if mismatches:
            logger.warning(f"Verdicts differ from the stored report: {mismatches}")
        logger.info(f"Verify: {'PASS' if ok else 'FAIL'}")
        return ExitCode.OK if ok else ExitCode.FAILURE
