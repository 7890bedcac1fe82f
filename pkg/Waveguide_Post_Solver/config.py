"""Run configuration: JSON documents in mm and GHz, validated with pydantic."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Annotated, Any, Dict, List, Literal, Optional, Union

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    PositiveFloat,
    ValidationError,
    field_validator,
    model_validator,
)

from Waveguide_Post_Solver.errors import (
    ConfigParseError,
    ConfigValidationError,
    InvalidInput,
)
from Waveguide_Post_Solver.junction import Discretization, PostJunction
from Waveguide_Post_Solver.modes import PRESETS, Waveguide
from Waveguide_Post_Solver.network import (
    DiscretizationPolicy,
    JunctionElement,
    Network,
    NetworkElement,
    SweepSettings,
    UniformGuide,
)

MM = 1e-3
GHZ = 1e9

Parameter = Literal["S11", "S21", "S12", "S22"]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class WaveguideConfig(_Section):
    """Either a named preset or explicit inner dimensions."""

    preset: Optional[str] = None
    a_mm: Optional[PositiveFloat] = None
    b_mm: Optional[PositiveFloat] = None
    eps_r: float = Field(1.0, ge=1.0)
    mu_r: float = Field(1.0, ge=1.0)

    @model_validator(mode="after")
    def _preset_or_dimensions(self) -> "WaveguideConfig":
        explicit = self.a_mm is not None or self.b_mm is not None
        if self.preset is not None:
            if explicit:
                raise ValueError("give either a preset or a_mm/b_mm, not both")
            if self.preset.strip().upper() not in PRESETS:
                raise ValueError(
                    f"unknown preset {self.preset!r}; known: {', '.join(PRESETS)}"
                )
        elif self.a_mm is None or self.b_mm is None:
            raise ValueError("a_mm and b_mm are required without a preset")
        return self

    def to_waveguide(self) -> Waveguide:
        if self.preset is not None:
            return Waveguide.preset(self.preset, self.eps_r, self.mu_r)
        return Waveguide(self.a_mm * MM, self.b_mm * MM, self.eps_r, self.mu_r)


class PostConfig(_Section):
    """A post offset ``d_mm`` from the axis (h = a/2 + d) or ``h_mm`` from the x = 0 wall."""

    type: Literal["post"] = "post"
    radius_mm: PositiveFloat
    d_mm: Optional[float] = None
    h_mm: Optional[PositiveFloat] = None

    @model_validator(mode="after")
    def _one_offset(self) -> "PostConfig":
        if (self.d_mm is None) == (self.h_mm is None):
            raise ValueError("a post needs exactly one of d_mm and h_mm")
        return self

    def to_junction(self, wg: Waveguide) -> PostJunction:
        if self.d_mm is not None:
            return PostJunction.from_axis_offset(wg, self.d_mm * MM, self.radius_mm * MM)
        return PostJunction(wg, self.h_mm * MM, self.radius_mm * MM)


class GuideConfig(_Section):
    type: Literal["guide"] = "guide"
    length_mm: float = Field(ge=0.0)


ElementConfig = Annotated[Union[PostConfig, GuideConfig], Field(discriminator="type")]


class SweepConfig(_Section):
    f_start_ghz: PositiveFloat = 12.4
    f_stop_ghz: PositiveFloat = 18.0
    n_points: int = Field(201, ge=1)

    @model_validator(mode="after")
    def _ordered(self) -> "SweepConfig":
        if not self.f_start_ghz < self.f_stop_ghz:
            raise ValueError("f_start_ghz must be below f_stop_ghz")
        return self


class NumericsConfig(_Section):
    modes: int = Field(60, ge=1)
    k_factor: float = Field(1.6, gt=1.0)
    k_min: int = Field(4, ge=1)
    k_d: Optional[int] = Field(None, ge=1)
    k_u: Optional[int] = Field(None, ge=1)
    k_c: Optional[int] = Field(None, ge=1)
    quadrature_order: int = Field(12, ge=1, le=64)
    rcond: float = Field(1e-12, gt=0.0, lt=1.0)
    threads: int = Field(1, ge=1)

    @model_validator(mode="after")
    def _all_or_no_counts(self) -> "NumericsConfig":
        given = [k is not None for k in (self.k_d, self.k_u, self.k_c)]
        if any(given) and not all(given):
            raise ValueError("k_d, k_u and k_c must be given together or not at all")
        if all(given) and not self.modes < self.k_d + self.k_u + self.k_c + 1:
            raise ValueError("modes must be below k_d + k_u + k_c + 1")
        return self

    def policy(self) -> DiscretizationPolicy:
        fixed = None
        if self.k_d is not None:
            fixed = Discretization(self.k_d, self.k_u, self.k_c)
        return DiscretizationPolicy(factor=self.k_factor, minimum=self.k_min, fixed=fixed)


class OutputConfig(_Section):
    csv: str = "sweep.csv"
    touchstone: Optional[str] = None
    parameters: List[Parameter] = Field(default_factory=lambda: ["S11", "S21"])

    @field_validator("parameters")
    @classmethod
    def _distinct(cls, value: List[str]) -> List[str]:
        if not value:
            raise ValueError("at least one S-parameter must be requested")
        if len(set(value)) != len(value):
            raise ValueError("S-parameters must not repeat")
        return value


class RunConfig(_Section):
    """A complete run: structure, sweep, numerical settings and outputs."""

    waveguide: WaveguideConfig
    elements: List[ElementConfig] = Field(min_length=1)
    sweep: SweepConfig = Field(default_factory=SweepConfig)
    numerics: NumericsConfig = Field(default_factory=NumericsConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)

    def to_waveguide(self) -> Waveguide:
        return self.waveguide.to_waveguide()

    def geometry_errors(self) -> List[str]:
        """Every post that leaves the guide and every pair of overlapping posts."""
        wg = self.to_waveguide()
        errors: List[str] = []
        for index, element in enumerate(self.elements):
            if isinstance(element, PostConfig):
                try:
                    element.to_junction(wg)
                except InvalidInput as e:
                    errors.append(f"elements.{index}: {e}")

        if not errors:
            try:
                self.build_network()
            except InvalidInput as e:
                errors.append(f"elements: {e}")
        return errors

    def build_network(self) -> Network:
        wg = self.to_waveguide()
        elements: List[NetworkElement] = []
        for element in self.elements:
            if isinstance(element, PostConfig):
                elements.append(JunctionElement(element.to_junction(wg)))
            else:
                elements.append(UniformGuide(element.length_mm * MM))
        return Network(wg, tuple(elements))

    def sweep_settings(self) -> SweepSettings:
        return SweepSettings(
            M=self.numerics.modes,
            policy=self.numerics.policy(),
            quadrature_order=self.numerics.quadrature_order,
            rcond=self.numerics.rcond,
        )

    @property
    def f_start(self) -> float:
        return self.sweep.f_start_ghz * GHZ

    @property
    def f_stop(self) -> float:
        return self.sweep.f_stop_ghz * GHZ

    def with_overrides(
        self,
        output: Optional[Path] = None,
        touchstone: Optional[Path] = None,
        threads: Optional[int] = None,
        quadrature_order: Optional[int] = None,
        modes: Optional[int] = None,
    ) -> "RunConfig":
        """Copy with command-line overrides applied and revalidated."""
        data = self.model_dump(mode="json")
        if output is not None:
            data["output"]["csv"] = str(output)
        if touchstone is not None:
            data["output"]["touchstone"] = str(touchstone)
        if threads is not None:
            data["numerics"]["threads"] = threads
        if quadrature_order is not None:
            data["numerics"]["quadrature_order"] = quadrature_order
        if modes is not None:
            data["numerics"]["modes"] = modes
        return _validate(data)


def _format_error(error: Dict[str, Any]) -> str:
    location = ".".join(str(part) for part in error["loc"])
    message = error["msg"]
    return f"{location}: {message}" if location else message


def _validate(data: Any) -> RunConfig:
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigValidationError([_format_error(err) for err in e.errors()]) from e
    errors = cfg.geometry_errors()
    if errors:
        raise ConfigValidationError(errors)
    return cfg


def parse_config(text: str) -> RunConfig:
    """
    Parse and validate a JSON run configuration.

    Raises:
        ConfigParseError: If the text is not a JSON object.
        ConfigValidationError: Listing every schema and geometry violation.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigParseError(
            f"invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}",
            line=e.lineno,
            column=e.colno,
        ) from e
    if not isinstance(data, dict):
        raise ConfigParseError(
            "configuration must be a JSON object", line=1, column=1
        )
    return _validate(data)


def load_config(path: Path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigParseError(f"cannot read {path}: {e}") from e
    return parse_config(text)


def dump_config(cfg: RunConfig) -> str:
    """Canonical JSON serialization; ``parse_config`` of the result equals ``cfg``."""
    return json.dumps(cfg.model_dump(mode="json", exclude_none=True), indent=2) + "\n"
