"""
Scenario files: YAML in, validated pydantic models out.

Frequencies are written in Hz (keys ending in `_hz`) and become rad/s in
`ParamsSpec.to_model_params`, the only place the 2π factor is applied.

    schema: 1
    name: fig4_time_resolved
    model: jc
    params: {omega_hz: 1.24e6, omega_m_hz: 1.304e6, g_hz: 0.078e6, nbar: 0.0}
    protocol:
      kind: time_resolved
      times: {start: 0.0, stop_periods: 2.0, points: 2000}
      observables: [sigma_y]
      frame: lab
      reps: 600
      seed: 2024
      larmor: {observable: sigma_y}
    output: {directory: results/fig4, formats: [csv, json]}
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Annotated, List, Literal, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from renorm_py.errors import ScenarioError
from renorm_py.models import ModelParams, jc_equivalent

TWO_PI = 2.0 * math.pi
SCHEMA_VERSION = 1

ModelName = Literal["jc", "ti_full", "ti_ld", "ti_rsb"]
Observable = Literal["sigma_x", "sigma_y", "sigma_z"]
Frame = Literal["rotating", "lab"]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ParamsSpec(_Strict):
    omega_m_hz: float = Field(gt=0)
    omega_hz: Optional[float] = Field(default=None, gt=0)
    omega_star_hz: Optional[float] = Field(default=None, gt=0)
    g_hz: float = Field(default=0.0, ge=0)
    eta: float = Field(default=0.0, ge=0, lt=1)
    omega_rabi_hz: float = Field(default=0.0, ge=0)
    nbar: Optional[float] = Field(default=None, ge=0)
    beta: Optional[float] = Field(default=None, gt=0, description="inverse temperature in s/rad (ħ = 1)")
    n_max: int = Field(default=30, ge=2, le=200)

    @model_validator(mode="after")
    def _one_temperature(self):
        if self.nbar is not None and self.beta is not None:
            raise ValueError("give nbar or beta, not both")
        return self

    def to_model_params(self) -> ModelParams:
        def rad(x):
            return None if x is None else TWO_PI * x

        return ModelParams(
            omega_m=rad(self.omega_m_hz),
            omega=rad(self.omega_hz),
            omega_star=rad(self.omega_star_hz),
            g=rad(self.g_hz),
            eta=self.eta,
            omega_rabi=rad(self.omega_rabi_hz),
            nbar=self.nbar,
            beta=self.beta,
            n_max=self.n_max,
        )


class TimeGrid(_Strict):
    """Uniform grid in seconds; the end is absolute (stop) or in coupling periods (stop_periods)."""
    start: float = Field(default=0.0, ge=0)
    stop: Optional[float] = Field(default=None, gt=0)
    stop_periods: Optional[float] = Field(default=None, gt=0)
    points: int = Field(ge=2)

    @model_validator(mode="after")
    def _one_end(self):
        if (self.stop is None) == (self.stop_periods is None):
            raise ValueError("time grid needs exactly one of stop / stop_periods")
        return self

    def resolve(self, coupling_period: Optional[float]) -> np.ndarray:
        if self.stop is not None:
            end = self.stop
        else:
            if coupling_period is None:
                raise ScenarioError("stop_periods needs a finite coupling period")
            end = self.stop_periods * coupling_period
        if end <= self.start:
            raise ScenarioError(f"time grid end {end!r} is not after start {self.start!r}")
        return np.linspace(self.start, end, self.points)


class PhaseGrid(_Strict):
    points: int = Field(default=12, ge=5)
    start: float = 0.0
    stop: float = TWO_PI
    endpoint: bool = False

    def resolve(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.points, endpoint=self.endpoint)


class _Sampled(_Strict):
    reps: int = Field(default=0, ge=0)
    seed: Optional[int] = Field(default=None, ge=0)

    @model_validator(mode="after")
    def _seed_when_sampling(self):
        if self.reps > 0 and self.seed is None:
            raise ValueError("seed is required whenever reps > 0")
        return self


class ShiftProfileSettings(_Strict):
    kind: Literal["shift_profile"]
    times: TimeGrid
    route: Literal["thermal", "vacuum"] = "thermal"


class RamseySweepSettings(_Sampled):
    kind: Literal["ramsey_average_sweep"]
    detunings_over_g: List[float] = Field(min_length=1)
    phases: PhaseGrid = PhaseGrid()
    coupling_first: bool = True
    control: bool = True


class LarmorSettings(_Strict):
    observable: Observable = "sigma_y"
    cluster_fraction: float = Field(default=0.25, gt=0, lt=0.5)


class TimeResolvedSettings(_Sampled):
    kind: Literal["time_resolved"]
    times: TimeGrid
    observables: List[Observable] = Field(default_factory=lambda: ["sigma_y"], min_length=1)
    frame: Frame = "rotating"
    larmor: Optional[LarmorSettings] = None

    @model_validator(mode="after")
    def _larmor_needs_lab_frame(self):
        if self.larmor is not None:
            if self.frame != "lab":
                raise ValueError("the zero-crossing estimator counts Larmor half-periods; use frame: lab")
            if self.larmor.observable not in self.observables:
                raise ValueError(f"larmor observable {self.larmor.observable} is not in observables")
        return self


class CompareModelsSettings(_Strict):
    kind: Literal["compare_models"]
    times: TimeGrid
    reference: ModelName = "jc"
    candidate: ModelName = "ti_full"
    frame: Frame = "rotating"


class TclExtractSettings(_Strict):
    kind: Literal["tcl_extract"]
    times: TimeGrid = Field(description="uniform grid; at least 5 points for the 5-point stencil")

    @model_validator(mode="after")
    def _stencil(self):
        if self.times.points < 5:
            raise ValueError("tcl_extract needs at least 5 time points")
        return self


ProtocolSettings = Annotated[
    Union[ShiftProfileSettings, RamseySweepSettings, TimeResolvedSettings, CompareModelsSettings,
          TclExtractSettings],
    Field(discriminator="kind"),
]

PROTOCOLS = ("shift_profile", "ramsey_average_sweep", "time_resolved", "compare_models", "tcl_extract")

_VACUUM_FORMULA = "δω̃(t) = −(2g²/Δ)/(1 + (Ω₁²/Δ²)cot²(Ω₁t/2))"
_AVERAGE_FORMULA = "⟨δω̃⟩ = −2g² sign(Δ)/(|Δ| + Ω₁) and T(Δ) = 2π/√(Δ² + 4g²)"


class OutputSpec(_Strict):
    directory: str = "results"
    formats: List[Literal["csv", "json"]] = Field(default_factory=lambda: ["csv", "json"], min_length=1)


class Scenario(_Strict):
    schema_version: Literal[1] = Field(alias="schema")
    name: str = Field(min_length=1)
    model: ModelName = "jc"
    params: ParamsSpec
    protocol: ProtocolSettings
    output: OutputSpec = OutputSpec()

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    @model_validator(mode="after")
    def _consistent(self):
        p = self.model_params()
        jc = jc_equivalent(p, self.model)
        kind = self.protocol.kind
        if kind == "shift_profile" and self.protocol.route == "vacuum" and jc.detuning == 0:
            raise ValueError(f"Δ = 0: the vacuum route evaluates {_VACUUM_FORMULA}, which needs Δ ≠ 0")
        if kind == "ramsey_average_sweep":
            if any(d == 0 for d in self.protocol.detunings_over_g):
                raise ValueError(f"detunings_over_g contains 0: {_AVERAGE_FORMULA} needs Δ ≠ 0")
            if jc.g == 0:
                raise ValueError("ramsey_average_sweep expresses Δ in units of g, so g must be > 0")
        if kind == "compare_models" and self.protocol.candidate != "jc" and p.omega_star is None:
            raise ValueError("compare_models against a trapped-ion model needs omega_star_hz")
        return self

    def model_params(self) -> ModelParams:
        try:
            return self.params.to_model_params()
        except ValueError as exc:
            raise ValueError(f"params: {exc}") from exc

    @property
    def seed(self) -> Optional[int]:
        return getattr(self.protocol, "seed", None)


def format_validation_error(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(x) for x in err["loc"]) or "<root>"
        lines.append(f"{loc}: {err['msg']}")
    return "\n".join(lines)


def load_scene(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        return yaml.safe_load(f)


def parse_scenario(data) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("scenario file must contain a mapping at top level")
    try:
        return Scenario.model_validate(data)
    except ValidationError as exc:
        raise ScenarioError(format_validation_error(exc)) from exc


def load_scenario(path: Union[str, Path]) -> Scenario:
    try:
        data = load_scene(str(path))
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{path}: not valid YAML ({exc})") from exc
    return parse_scenario(data)
