"""Hybrid energy and the admissible multiplier range under hybrid feedback."""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from thermopiezo.controllers.feedback import HybridFeedback
from thermopiezo.controllers.mky import MkyCertificate, verify_mky
from thermopiezo.discretization.energy import controller_storage, field_energy
from thermopiezo.discretization.grid import Grid
from thermopiezo.discretization.state import DiscreteState, InterfaceClosure
from thermopiezo.errors import CertificateRequired, MissingCertificate
from thermopiezo.model.lyapunov import LyapunovConstants
from thermopiezo.model.material import MaterialParams

logger = logging.getLogger(__name__)


def hybrid_energy(
    s: DiscreteState,
    cert: Optional[MkyCertificate],
    p: MaterialParams,
    g: Grid,
    closure: InterfaceClosure = InterfaceClosure.BALANCED,
) -> float:
    """E_hybrid = field energy + q^T P q / 2."""
    if cert is None:
        raise MissingCertificate("hybrid_energy needs an MKY certificate")
    return field_energy(s, p, g, closure) + controller_storage(s.q, cert.P)


@dataclass
class HybridDeltaBound:
    """The four branches, each already divided by a1 l2, and their minimum."""

    equivalence: float
    velocity: float
    current: float
    storage: float
    lambda_min_Q: float
    lambda_max_P: float
    warnings: list[str] = field(default_factory=list)

    @property
    def bound(self) -> float:
        return min(self.equivalence, self.velocity, self.current, self.storage)

    @property
    def certified(self) -> bool:
        return self.bound > 0.0

    def to_dict(self) -> dict:
        return {
            "bound": self.bound,
            "certified": self.certified,
            "branches": {
                "equivalence": self.equivalence,
                "velocity": self.velocity,
                "current": self.current,
                "storage": self.storage,
            },
            "lambda_min_Q": self.lambda_min_Q,
            "lambda_max_P": self.lambda_max_P,
            "warnings": list(self.warnings),
        }


def admissible_delta_hybrid(
    consts: LyapunovConstants,
    p: MaterialParams,
    ctrl: HybridFeedback,
    cert: Optional[MkyCertificate],
) -> HybridDeltaBound:
    """
    q-independent upper bound on delta for the hybrid decay estimate.

    The storage branch depends on q through a ratio of quadratic forms; it
    is replaced by its infimum over the unit sphere,
    Delta lmin(Q) / [k_c |c|^2 + (8 a1 b1 l2 kappa / l1^2) lmax(P)].

    Raises:
        CertificateRequired: If cert is missing or fails verify_mky.
    """
    if cert is None:
        raise CertificateRequired("Hybrid delta bound needs a verified MKY certificate")
    check = verify_mky(ctrl, cert)
    if not check.passed:
        raise CertificateRequired(f"Certificate does not verify: {'; '.join(check.messages)}")

    scale = consts.a1 * p.l2
    stiff = (p.alpha + p.gamma**2 * p.beta) / (p.alpha1 * p.beta)
    lam_q = float(np.min(np.linalg.eigvalsh(cert.Q)))
    lam_p = float(np.max(np.linalg.eigvalsh(cert.P)))
    c_norm2 = float(ctrl.c @ ctrl.c)

    equivalence = 1.0 / consts.Mconst
    velocity = 2.0 * ctrl.xi1 / (p.rho + 2.0 * ctrl.xi1**2 / p.alpha1) / scale
    current = 2.0 * ctrl.gamma / (p.mu + 2.0 * ctrl.d**2 * stiff) / scale
    heat = 8.0 * consts.a1 * consts.b1 * p.l2 * p.kappa / p.l1**2
    storage = cert.Delta * lam_q / (2.0 * stiff * c_norm2 + heat * lam_p) / scale

    warnings = []
    if ctrl.gamma == 0.0:
        warnings.append("Gamma = 0 gives a zero current branch: hybrid rate not certified")
        logger.warning(warnings[-1])

    result = HybridDeltaBound(
        equivalence=equivalence,
        velocity=velocity,
        current=current,
        storage=storage,
        lambda_min_Q=lam_q,
        lambda_max_P=lam_p,
        warnings=warnings,
    )
    logger.debug(f"Hybrid delta bound: {result.to_dict()}")
    return result
