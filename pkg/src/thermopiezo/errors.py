"""Exception hierarchy.

Three families map to the CLI exit codes: configuration problems (2),
controller/certificate problems (3) and numerical failures (4).
"""

from typing import Optional


class ThermoPiezoError(Exception):
    """Base class for every error raised by the toolkit."""

    exit_code: int = 1


# --- configuration family -------------------------------------------------


class ConfigError(ThermoPiezoError, ValueError):
    """Invalid input: config text, parameters, ranges."""

    exit_code = 2


class ConfigParseError(ConfigError):
    """Config text is not valid YAML."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"Config parse error{where}: {message}")


class UnknownKeyError(ConfigError):
    """Config contains a key no section declares."""

    def __init__(self, key: str):
        self.key = key
        super().__init__(f"Unknown config key: {key}")


class ConfigValidationError(ConfigError):
    """Config value fails its schema constraint."""


class NonPositiveParameter(ConfigError):
    def __init__(self, name: str, value: float):
        self.name = name
        self.value = value
        bound = "non-negative" if name == "gamma" else "strictly positive"
        super().__init__(f"Parameter '{name}' must be {bound}, got {value}")


class MissingParameter(ConfigError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"Missing material parameter '{name}'")


class ParameterValidationError(ConfigError):
    """Aggregates every violation found by validate_params."""

    def __init__(self, violations: list[ConfigError]):
        self.violations = violations
        names = ", ".join(getattr(v, "name", "?") for v in violations)
        super().__init__(f"{len(violations)} invalid material parameter(s): {names}")


class NTooSmall(ConfigError):
    def __init__(self, n: int):
        self.n = n
        super().__init__(f"Grid needs N >= 2 interior nodes, got N={n}")


class IndexOutOfRange(ConfigError, IndexError):
    pass


class DeltaOutOfRange(ConfigError):
    def __init__(self, delta: float, upper: float, lower: float = 0.0):
        self.delta = delta
        self.upper = upper
        super().__init__(f"delta={delta!r} outside admissible range ({lower}, {upper!r})")


class EmptyFeasibleSet(ConfigError):
    """Gain search box contains no positive gains."""


# --- controller family ----------------------------------------------------


class ControllerError(ThermoPiezoError, ValueError):
    exit_code = 3


class DimensionMismatch(ControllerError):
    pass


class AssumptionsFailed(ControllerError):
    def __init__(self, message: str, report: object = None):
        self.report = report
        super().__init__(message)


class FactorizationFailed(ControllerError):
    def __init__(self, message: str, diagnostics: Optional[dict] = None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class MissingCertificate(ControllerError):
    pass


class CertificateRequired(ControllerError):
    pass


class CertificateFormatError(ControllerError):
    pass


# --- numerical family -----------------------------------------------------


class NumericalError(ThermoPiezoError, RuntimeError):
    exit_code = 4


class SingularSolve(NumericalError):
    def __init__(self, message: str, pivot: Optional[int] = None):
        self.pivot = pivot
        where = f" at pivot {pivot}" if pivot is not None else ""
        super().__init__(f"Singular solve{where}: {message}")


class ConstraintProjectionFailed(NumericalError):
    pass


class InconsistentState(NumericalError):
    pass


class NonpositiveEnergy(NumericalError):
    pass


class WindowTooShort(NumericalError):
    def __init__(self, samples: int, required: int):
        self.samples = samples
        super().__init__(f"Fit window holds {samples} samples, need at least {required}")


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the CLI exit code of its family."""
    if isinstance(exc, ThermoPiezoError):
        return exc.exit_code
    return 1
