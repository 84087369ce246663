"""Run configuration (YAML) and process settings (environment)."""

from pathlib import Path
from typing import Any, Literal, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from thermopiezo.config.constants import DEFAULT_B1, DEFAULT_INTERIOR_NODES, DEFAULT_TUNE_POINTS
from thermopiezo.controllers.feedback import (
    ControllerKind,
    ControllerSpec,
    HybridFeedback,
    OpenLoop,
    ScalarDynamic,
    StaticFeedback,
)
from thermopiezo.discretization.grid import Grid, build_grid
from thermopiezo.discretization.state import InterfaceClosure
from thermopiezo.errors import (
    ConfigParseError,
    ConfigValidationError,
    UnknownKeyError,
)
from thermopiezo.model.material import MaterialParams, validate_params


class Section(BaseModel):
    """Base for config sections: unknown keys are errors."""

    model_config = ConfigDict(extra="forbid")


class MaterialSection(Section):
    """Physical parameters; presence and positivity are checked by validate_params."""

    rho: Optional[float] = None
    mu: Optional[float] = None
    alpha1: Optional[float] = None
    beta: Optional[float] = None
    gamma: Optional[float] = None
    kappa: Optional[float] = None
    l1: Optional[float] = None
    l2: Optional[float] = None


class GridSection(Section):
    N: int = DEFAULT_INTERIOR_NODES
    closure: InterfaceClosure = InterfaceClosure.BALANCED


class TimeSection(Section):
    dt: Union[float, Literal["auto"]] = "auto"
    T: float = Field(default=10.0, ge=0.0)
    record_every: int = Field(default=1, ge=1)

    @field_validator("dt")
    @classmethod
    def _positive_dt(cls, v: Union[float, str]) -> Union[float, str]:
        if isinstance(v, float) and not v > 0:
            raise ValueError("dt must be positive or 'auto'")
        return v


class ControllerSection(Section):
    """Controller kind and its parameters; unused fields are ignored for the chosen kind."""

    kind: ControllerKind = ControllerKind.STATIC
    xi1: float = 1.0
    xi2: float = 1.0
    eta: float = 0.0
    A: Optional[list[list[float]]] = None
    b: Optional[list[float]] = None
    c: Optional[list[float]] = None
    d: float = 0.0
    Gamma: float = 0.0
    zeta: Optional[list[float]] = None
    certificate: Optional[str] = None
    Q: Optional[list[list[float]]] = None

    def build(self) -> ControllerSpec:
        """
        Construct the controller object.

        Raises:
            ConfigValidationError: Missing hybrid matrices or non-positive gains.
            DimensionMismatch: Hybrid matrices of inconsistent size.
        """
        if self.kind == ControllerKind.OPEN_LOOP:
            return OpenLoop()
        if self.kind == ControllerKind.STATIC:
            return StaticFeedback(xi1=self.xi1, xi2=self.xi2)
        if self.kind == ControllerKind.SCALAR:
            return ScalarDynamic(xi2=self.xi2, eta=self.eta, xi1=self.xi1)

        missing = [name for name in ("A", "b", "c") if getattr(self, name) is None]
        if missing:
            raise ConfigValidationError(f"Hybrid controller needs {', '.join(missing)}")
        n = len(self.A or [])
        zeta = self.zeta if self.zeta is not None else [0.0] * n
        return HybridFeedback(
            A=np.array(self.A, dtype=float),
            b=np.array(self.b, dtype=float),
            c=np.array(self.c, dtype=float),
            d=self.d,
            gamma=self.Gamma,
            zeta=np.array(zeta, dtype=float),
            xi1=self.xi1,
        )

    def weight_matrix(self) -> Optional[np.ndarray]:
        return None if self.Q is None else np.array(self.Q, dtype=float)


class LyapunovSection(Section):
    b1: float = Field(default=DEFAULT_B1, gt=0.0)
    delta: Union[float, Literal["auto"]] = "auto"


class OutputSection(Section):
    directory: Optional[str] = None  # falls back to AppSettings.output_root
    snapshots: bool = False


class ProfileSection(Section):
    """One field's initial profile: amplitude * shape(x)."""

    kind: Literal["zero", "sine", "gaussian"] = "zero"
    amplitude: float = 1.0
    mode: int = Field(default=1, ge=1)
    center: float = 0.5
    width: float = Field(default=0.1, gt=0.0)


def _sine() -> ProfileSection:
    return ProfileSection(kind="sine")


class InitialSection(Section):
    """
    Per-field initial data. z0 is sampled at the distance from the joint.
    A tabulated CSV overrides the closed-form profiles for the columns it has.
    """

    z0: ProfileSection = Field(default_factory=_sine)
    v0x: ProfileSection = Field(default_factory=ProfileSection)
    p0x: ProfileSection = Field(default_factory=ProfileSection)
    v1: ProfileSection = Field(default_factory=_sine)
    p1: ProfileSection = Field(default_factory=ProfileSection)
    tabulated: Optional[str] = None


class TuneSection(Section):
    xi1_min: float = 1e-2
    xi1_max: float = 1e2
    xi2_min: float = 1e-2
    xi2_max: float = 1e2
    points: int = Field(default=DEFAULT_TUNE_POINTS, ge=2)
    workers: Optional[int] = Field(default=None, ge=1)
    confirm_top: int = Field(default=0, ge=0)
    refine: bool = True


class LoggingSection(Section):
    level: Optional[str] = None
    file: Optional[str] = None


class RunConfig(Section):
    """A complete run configuration; every section may be omitted."""

    material: MaterialSection = Field(default_factory=MaterialSection)
    grid: GridSection = Field(default_factory=GridSection)
    time: TimeSection = Field(default_factory=TimeSection)
    controller: ControllerSection = Field(default_factory=ControllerSection)
    lyapunov: LyapunovSection = Field(default_factory=LyapunovSection)
    output: OutputSection = Field(default_factory=OutputSection)
    initial: InitialSection = Field(default_factory=InitialSection)
    tune: TuneSection = Field(default_factory=TuneSection)
    logging: LoggingSection = Field(default_factory=LoggingSection)

    def params(self) -> MaterialParams:
        return validate_params(self.material.model_dump())

    def build_grid(self) -> Grid:
        p = self.params()
        return build_grid(self.grid.N, p.l1, p.l2)

    def to_dict(self) -> dict[str, Any]:
        """Effective configuration, defaults included."""
        return self.model_dump(mode="json")


def _dotted(loc: tuple) -> str:
    return ".".join(str(part) for part in loc)


def parse_config(text: str) -> RunConfig:
    """
    Parse and cross-validate a YAML run configuration.

    Raises:
        ConfigParseError: Malformed YAML or a non-mapping document.
        UnknownKeyError: A key no section defines.
        ConfigValidationError: A value of the wrong type or range.
        ParameterValidationError: Missing or non-positive material parameters.
        NTooSmall: Fewer than 2 interior nodes.
    """
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigParseError(f"Invalid YAML: {getattr(e, 'problem', e)}", line) from e

    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigParseError(f"Config must be a mapping of sections, got {type(data).__name__}")

    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as e:
        errors = e.errors()
        for err in errors:
            if err["type"] == "extra_forbidden":
                raise UnknownKeyError(_dotted(err["loc"])) from e
        details = "; ".join(f"{_dotted(err['loc'])}: {err['msg']}" for err in errors)
        raise ConfigValidationError(f"Invalid configuration: {details}") from e

    cfg.build_grid()
    cfg.controller.build()
    return cfg


def load_config(path: Union[str, Path]) -> RunConfig:
    """Read and parse a YAML run configuration file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigParseError(f"Cannot read config {path}: {e.strerror}") from e
    return parse_config(text)


class AppSettings(BaseSettings):
    """Process-level defaults loaded from THERMOPIEZO__* environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="THERMOPIEZO__",
        env_file=".env",
        env_nested_delimiter="__",
        case_sensitive=False,
        extra="ignore",
    )

    log_level: str = "INFO"
    output_root: str = "runs"
    workers: Optional[int] = Field(default=None, ge=1)


# Singleton instance
_settings: Optional[AppSettings] = None


def get_settings() -> AppSettings:
    """Get or create the settings singleton."""
    global _settings
    if _settings is None:
        _settings = AppSettings()
    return _settings
