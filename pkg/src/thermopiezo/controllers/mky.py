"""
Positive-real (MKY) certificates for hybrid controllers.

A certificate (P, q1, Delta, Q) satisfies

    A^T P + P A = -q1 q1^T - Delta Q
    P b - c     = sqrt(2 (d - Gamma)) q1

and supplies the storage q^T P q / 2 of the hybrid energy.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np
import scipy.linalg as la

from thermopiezo.config.constants import (
    FLOAT_DIGITS,
    MKY_ABS_TOL,
    MKY_DELTA_LADDER,
    MKY_REL_TOL,
)
from thermopiezo.controllers.assumptions import check_hybrid_assumptions
from thermopiezo.controllers.feedback import HybridFeedback
from thermopiezo.errors import (
    AssumptionsFailed,
    CertificateFormatError,
    DimensionMismatch,
    FactorizationFailed,
)

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class MkyCertificate:
    P: np.ndarray
    q1: np.ndarray
    Delta: float
    Q: np.ndarray
    rel_tol: float = MKY_REL_TOL
    abs_tol: float = MKY_ABS_TOL

    def __post_init__(self) -> None:
        self.P = np.atleast_2d(np.asarray(self.P, dtype=float))
        self.Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        self.q1 = np.atleast_1d(np.asarray(self.q1, dtype=float)).ravel()
        self.Delta = float(self.Delta)

    @property
    def n(self) -> int:
        return int(self.P.shape[0])

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "P": self.P.tolist(),
            "q1": self.q1.tolist(),
            "Delta": self.Delta,
            "Q": self.Q.tolist(),
        }


@dataclass
class MkyVerification:
    lyapunov_residual: float
    coupling_residual: float
    lyapunov_tolerance: float
    coupling_tolerance: float
    P_min_eig: float
    Q_min_eig: float
    P_symmetric: bool
    messages: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.messages

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "lyapunov_residual": self.lyapunov_residual,
            "coupling_residual": self.coupling_residual,
            "lyapunov_tolerance": self.lyapunov_tolerance,
            "coupling_tolerance": self.coupling_tolerance,
            "P_min_eig": self.P_min_eig,
            "Q_min_eig": self.Q_min_eig,
            "P_symmetric": self.P_symmetric,
            "messages": list(self.messages),
        }


def _check_conforming(ctrl: HybridFeedback, P: np.ndarray, Q: np.ndarray,
                      q1: Optional[np.ndarray] = None) -> None:
    n = ctrl.n
    for name, shape in (("P", P.shape), ("Q", Q.shape)):
        if shape != (n, n):
            raise DimensionMismatch(f"Certificate block {name} has shape {shape}, need n={n}")
    if q1 is not None and len(q1) != n:
        raise DimensionMismatch(f"Certificate vector q1 has length {len(q1)}, need n={n}")


def verify_mky(ctrl: HybridFeedback, cert: MkyCertificate) -> MkyVerification:
    """Residuals of both identities and definiteness margins; never raises on failure."""
    _check_conforming(ctrl, cert.P, cert.Q, cert.q1)
    A, b, c = ctrl.A, ctrl.b, ctrl.c
    P, Q, q1 = cert.P, cert.Q, cert.q1
    gap = ctrl.d - ctrl.gamma

    lyap = A.T @ P + P @ A + np.outer(q1, q1) + cert.Delta * Q
    coupling = P @ b - c - math.sqrt(2.0 * max(gap, 0.0)) * q1

    lyap_res = float(np.linalg.norm(lyap, "fro"))
    coup_res = float(np.linalg.norm(coupling))
    lyap_tol = cert.rel_tol * float(np.linalg.norm(P, "fro"))
    coup_tol = cert.rel_tol * float(np.linalg.norm(c)) + cert.abs_tol

    sym = 0.5 * (P + P.T)
    p_min = float(np.min(np.linalg.eigvalsh(sym)))
    q_min = float(np.min(np.linalg.eigvalsh(0.5 * (Q + Q.T))))
    p_symmetric = bool(np.allclose(P, P.T, rtol=0.0, atol=cert.rel_tol * max(1.0, abs(p_min))))

    messages = []
    if lyap_res > lyap_tol:
        messages.append(f"Lyapunov identity residual {lyap_res:.3e} exceeds {lyap_tol:.3e}")
    if coup_res > coup_tol:
        messages.append(f"Coupling identity residual {coup_res:.3e} exceeds {coup_tol:.3e}")
    if not p_symmetric:
        messages.append("P is not symmetric")
    if p_min <= 0.0:
        messages.append(f"P is not positive definite (min eigenvalue {p_min:.6g})")
    if q_min <= 0.0:
        messages.append(f"Q is not positive definite (min eigenvalue {q_min:.6g})")
    if cert.Delta <= 0.0:
        messages.append(f"Delta must be positive, got {cert.Delta:.6g}")

    return MkyVerification(
        lyapunov_residual=lyap_res,
        coupling_residual=coup_res,
        lyapunov_tolerance=lyap_tol,
        coupling_tolerance=coup_tol,
        P_min_eig=p_min,
        Q_min_eig=q_min,
        P_symmetric=p_symmetric,
        messages=messages,
    )


def _solve_scalar(ctrl: HybridFeedback, Q: np.ndarray) -> MkyCertificate:
    a, b, c = float(ctrl.A[0, 0]), float(ctrl.b[0]), float(ctrl.c[0])
    qs = float(Q[0, 0])
    gap = ctrl.d - ctrl.gamma

    if gap == 0.0:
        P = c / b
        slack = -2.0 * a * P
        q1 = math.sqrt(slack / 2.0) if slack > 0 else 0.0
        delta = slack / (2.0 * qs)
    else:
        # member of the one-parameter family with the largest Delta
        P = c / b - 2.0 * a * gap / b**2
        q1 = (P * b - c) / math.sqrt(2.0 * gap)
        delta = (-2.0 * a * P - q1**2) / qs

    if P <= 0.0 or delta <= 0.0:
        raise FactorizationFailed(
            f"Scalar certificate degenerate: P={P:.6g}, Delta={delta:.6g}",
            diagnostics={"P": P, "Delta": delta},
        )
    return MkyCertificate(P=[[P]], q1=[q1], Delta=delta, Q=Q)


def _solve_riccati(ctrl: HybridFeedback, Q: np.ndarray) -> MkyCertificate:
    gap = ctrl.d - ctrl.gamma
    if gap <= 0.0:
        raise FactorizationFailed(
            "d = Gamma with n >= 2 has no Riccati form; supply a certificate file",
            diagnostics={"d": ctrl.d, "Gamma": ctrl.gamma},
        )

    A, b, c = ctrl.A, ctrl.b[:, None], ctrl.c[:, None]
    R = np.array([[2.0 * gap]])
    start, stop, count = MKY_DELTA_LADDER
    tried: list[dict] = []

    for delta in np.geomspace(start, stop, int(count)):
        try:
            # X = -P solves A^T X + X A - (X b + c) R^-1 (b^T X + c^T) - Delta Q = 0
            X = la.solve_continuous_are(A, b, -delta * Q, R, s=c)
        except (np.linalg.LinAlgError, ValueError) as e:
            tried.append({"Delta": float(delta), "error": str(e)})
            continue

        P = -0.5 * (X + X.T)
        q1 = (P @ ctrl.b - ctrl.c) / math.sqrt(2.0 * gap)
        cert = MkyCertificate(P=P, q1=q1, Delta=float(delta), Q=Q)

        # re-balance P against the Lyapunov identity alone
        polished = la.solve_continuous_lyapunov(A.T, -(np.outer(q1, q1) + delta * Q))
        candidate = MkyCertificate(P=0.5 * (polished + polished.T), q1=q1, Delta=float(delta), Q=Q)
        for option in (candidate, cert):
            report = verify_mky(ctrl, option)
            if report.passed:
                logger.debug(f"Riccati certificate accepted at Delta={delta:.3e}")
                return option
        tried.append({"Delta": float(delta), "error": "; ".join(report.messages)})

    raise FactorizationFailed(
        f"No certificate found on the Delta ladder for n={ctrl.n}; supply one manually",
        diagnostics={"attempts": tried},
    )


def solve_mky(ctrl: HybridFeedback, Q: Optional[np.ndarray] = None) -> MkyCertificate:
    """
    Construct an MKY certificate.

    n = 1 is solved in closed form. For n >= 2 the identities reduce to a
    positive-real Riccati equation, solved down a geometric Delta ladder;
    the first Delta whose certificate verifies is returned.

    Args:
        ctrl: Hybrid controller that passes check_hybrid_assumptions.
        Q: Positive-definite weight; identity by default.

    Raises:
        AssumptionsFailed: If the controller or Q violates the preconditions.
        FactorizationFailed: If no certificate could be constructed.
    """
    n = ctrl.n
    Q = np.eye(n) if Q is None else np.atleast_2d(np.asarray(Q, dtype=float))
    if Q.shape != (n, n):
        raise DimensionMismatch(f"Q has shape {Q.shape}, need ({n}, {n})")
    if not np.allclose(Q, Q.T) or np.min(np.linalg.eigvalsh(0.5 * (Q + Q.T))) <= 0.0:
        raise AssumptionsFailed("Q must be symmetric positive definite")

    report = check_hybrid_assumptions(ctrl)
    if not report.passed:
        raise AssumptionsFailed("; ".join(report.failures), report=report)

    cert = _solve_scalar(ctrl, Q) if n == 1 else _solve_riccati(ctrl, Q)
    logger.info(f"MKY certificate: n={n}, Delta={cert.Delta:.6g}, "
                f"min eig P={np.min(np.linalg.eigvalsh(cert.P)):.6g}")
    return cert


# --- plain-text certificate files -----------------------------------------


def _fmt(values: np.ndarray) -> str:
    return " ".join(f"{v:.{FLOAT_DIGITS}g}" for v in np.atleast_1d(values))


def export_certificate(cert: MkyCertificate, path: Union[str, Path]) -> Path:
    """Write the header line and the P, q1, Delta, Q blocks."""
    path = Path(path)
    lines = [f"MKY {cert.n} {cert.rel_tol:.{FLOAT_DIGITS}g} {cert.abs_tol:.{FLOAT_DIGITS}g}"]
    lines.append("P")
    lines.extend(_fmt(row) for row in cert.P)
    lines.append("q1")
    lines.append(_fmt(cert.q1))
    lines.append("Delta")
    lines.append(_fmt(np.array([cert.Delta])))
    lines.append("Q")
    lines.extend(_fmt(row) for row in cert.Q)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    logger.info(f"Certificate written to {path}")
    return path


def _read_rows(lines: list[str], start: int, label: str, rows: int, cols: int) -> np.ndarray:
    if start >= len(lines) or lines[start] != label:
        found = lines[start] if start < len(lines) else "end of file"
        raise CertificateFormatError(f"Expected block '{label}', found '{found}'")
    block = lines[start + 1 : start + 1 + rows]
    if len(block) != rows:
        raise CertificateFormatError(f"Block '{label}' needs {rows} row(s), got {len(block)}")
    try:
        data = np.array([[float(tok) for tok in row.split()] for row in block])
    except ValueError as e:
        raise CertificateFormatError(f"Block '{label}': {e}") from e
    if data.shape != (rows, cols):
        raise CertificateFormatError(f"Block '{label}' has shape {data.shape}, need {(rows, cols)}")
    return data


def load_certificate(path: Union[str, Path]) -> MkyCertificate:
    """
    Read a certificate written by export_certificate.

    Raises:
        CertificateFormatError: On a malformed header or block.
    """
    path = Path(path)
    if not path.exists():
        raise CertificateFormatError(f"Certificate file not found: {path}")
    lines = [ln.strip() for ln in path.read_text().splitlines() if ln.strip()]
    if not lines:
        raise CertificateFormatError(f"Empty certificate file: {path}")

    header = lines[0].split()
    if len(header) != 4 or header[0] != "MKY":
        raise CertificateFormatError(f"Bad header '{lines[0]}', expected 'MKY n rel_tol abs_tol'")
    try:
        n = int(header[1])
        rel_tol, abs_tol = float(header[2]), float(header[3])
    except ValueError as e:
        raise CertificateFormatError(f"Bad header '{lines[0]}': {e}") from e
    if n < 1:
        raise CertificateFormatError(f"Certificate dimension must be positive, got {n}")

    pos = 1
    P = _read_rows(lines, pos, "P", n, n)
    pos += 1 + n
    q1 = _read_rows(lines, pos, "q1", 1, n)[0]
    pos += 2
    delta = _read_rows(lines, pos, "Delta", 1, 1)[0, 0]
    pos += 2
    Q = _read_rows(lines, pos, "Q", n, n)
    pos += 1 + n
    if pos != len(lines):
        raise CertificateFormatError(f"Trailing content after block 'Q' in {path}")

    return MkyCertificate(P=P, q1=q1, Delta=delta, Q=Q, rel_tol=rel_tol, abs_tol=abs_tol)
