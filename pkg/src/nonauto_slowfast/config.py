"""Scenario configuration: YAML/JSON documents validated into frozen models.

Unknown keys are rejected and validation errors name the offending field
path (``gamma.amplitude``, ``forcing.terms.1.kind``, ...).
"""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Annotated, List, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .hull import ForcingTerm, HullMetricConfig, NeighborhoodSampler, QuasiPeriodicForcing
from .layer import SeedBox, riccati_layer
from .maps import (
    ArctanGamma,
    ConstantGamma,
    ConstantSlowField,
    FastVariableSlowField,
    LinearGamma,
    LinearSlowField,
    QuasiPeriodicGamma,
    TableGamma,
)
from .ode import IntegratorConfig
from .slowfast import SlowFastScenario
from .tipping import TransitionScenario

__all__ = ["ScenarioConfig", "ConfigError", "load_config", "parse_config", "dump_config"]


class ConfigError(ValueError):
    pass


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class TermModel(_Model):
    amplitude: float
    frequency: float
    phase: float = 0.0
    kind: Literal["sin", "cos"] = "sin"


class ForcingModel(_Model):
    offset: float = 0.962
    terms: List[TermModel] = Field(
        default_factory=lambda: [TermModel(amplitude=-1.0, frequency=0.5), TermModel(amplitude=-1.0, frequency=math.sqrt(5.0))]
    )

    def build(self) -> QuasiPeriodicForcing:
        return QuasiPeriodicForcing(
            tuple(ForcingTerm(t.amplitude, t.frequency, t.phase, t.kind) for t in self.terms), self.offset
        )


class GammaTrig(_Model):
    amplitude: float = 1.0
    frequency: float
    kind: Literal["sin", "cos"] = "sin"


class QPGammaModel(_Model):
    kind: Literal["quasiperiodic-sum"]
    scale: float = 0.2
    terms: List[GammaTrig] = Field(
        default_factory=lambda: [GammaTrig(frequency=math.sqrt(2.0), kind="sin"), GammaTrig(frequency=0.2, kind="cos")]
    )

    def build(self):
        return QuasiPeriodicGamma(tuple((t.amplitude, t.frequency, t.kind) for t in self.terms), self.scale)


class ArctanGammaModel(_Model):
    kind: Literal["arctan"]
    amplitude: float = 1.0

    def build(self):
        return ArctanGamma(self.amplitude)


class TableGammaModel(_Model):
    kind: Literal["table"]
    x: List[float]
    values: List[float]

    @model_validator(mode="after")
    def _check(self):
        if len(self.x) != len(self.values) or len(self.x) < 2:
            raise ValueError("x and values need equal length >= 2")
        if any(b <= a for a, b in zip(self.x, self.x[1:])):
            raise ValueError("x must be strictly increasing")
        return self

    def build(self):
        return TableGamma(tuple(self.x), tuple(self.values))


class ConstantGammaModel(_Model):
    kind: Literal["constant"]
    value: float = 0.0

    def build(self):
        return ConstantGamma(self.value)


class LinearGammaModel(_Model):
    kind: Literal["linear"]
    slope: float = 1.0
    intercept: float = 0.0

    def build(self):
        return LinearGamma(self.slope, self.intercept)


GammaModel = Annotated[
    Union[QPGammaModel, ArctanGammaModel, TableGammaModel, ConstantGammaModel, LinearGammaModel],
    Field(discriminator="kind"),
]


class SlowFieldModel(_Model):
    kind: Literal["constant-one", "constant", "linear", "fast-variable"] = "constant-one"
    value: float = 1.0
    rate: float = -1.0
    bias: float = 0.0
    scale: float = 1.0

    def build(self):
        if self.kind == "constant-one":
            return ConstantSlowField(1.0)
        if self.kind == "constant":
            return ConstantSlowField(self.value)
        if self.kind == "linear":
            return LinearSlowField(self.rate, self.bias)
        return FastVariableSlowField(self.scale)


class InitialModel(_Model):
    x0: List[float] = Field(default_factory=lambda: [0.0])
    y0: List[float] = Field(default_factory=lambda: [1.5])


class HorizonsModel(_Model):
    t0: float = Field(20.0, gt=0)


class IntegratorModel(_Model):
    method: Literal["rk4", "rk45"] = "rk4"
    step: float = Field(1e-2, gt=0)
    abs_tol: float = Field(1e-9, gt=0)
    rel_tol: float = Field(1e-9, gt=0)
    max_steps: int = Field(50_000_000, ge=1)

    def build(self):
        return IntegratorConfig(self.method, self.step, self.abs_tol, self.rel_tol, self.max_steps)


class FiberModel(_Model):
    seed_lower: Optional[List[float]] = None  # default: repeller max + 0.1
    seed_upper: Optional[List[float]] = None  # default: repeller max + 3
    spacing: float = Field(0.25, gt=0)
    relative: bool = True
    T_pull: float = Field(40.0, gt=0)
    tol: float = Field(1e-3, gt=0)
    spinup: float = Field(50.0, gt=0)

    @model_validator(mode="after")
    def _pair(self):
        if (self.seed_lower is None) != (self.seed_upper is None):
            raise ValueError("give both seed_lower and seed_upper or neither")
        return self


class MetricModel(_Model):
    mode: Literal["torus-angle", "compact-open"] = "torus-angle"
    radii: List[float] = Field(default_factory=lambda: [10.0, 100.0, 1000.0])
    weights: List[float] = Field(default_factory=lambda: [0.5, 0.25, 0.25])

    def build(self):
        return HullMetricConfig(self.mode, tuple(self.radii), tuple(self.weights))


class SamplerModel(_Model):
    n_boundary: int = Field(8, ge=1)
    quantum: float = Field(0.025, gt=0)
    max_levels: int = Field(8, ge=1)

    def build(self, seed: int):
        return NeighborhoodSampler(self.n_boundary, self.quantum, self.max_levels, seed)


class TrackingModel(_Model):
    mode: Literal["eta", "proxy", "pullback", "inflated"] = "proxy"
    T_start: float = Field(0.0, ge=0)
    delta: float = Field(0.0, ge=0)
    per_decade: int = Field(2000, ge=1)
    n_fiber_samples: int = Field(41, ge=2)
    search_tol: float = Field(1e-3, gt=0)
    hull_only: bool = False


class TippingModel(_Model):
    band: float = Field(0.2, gt=0)
    final_fraction: float = Field(0.2, gt=0, lt=1)
    gamma_tol: float = Field(1e-3, gt=0)
    eps_lo: float = Field(0.05, gt=0)
    eps_hi: float = Field(0.8, gt=0)
    bisect_tol: float = Field(1e-3, gt=0)
    pair_window: float = Field(100.0, gt=0)


class OutputModel(_Model):
    dir: str = "out"


class ScenarioConfig(_Model):
    name: str = "custom"
    forcing: ForcingModel = Field(default_factory=ForcingModel)
    theta0: Optional[List[float]] = None
    gamma: GammaModel = Field(default_factory=lambda: QPGammaModel(kind="quasiperiodic-sum"))
    slow_field: SlowFieldModel = Field(default_factory=SlowFieldModel)
    initial: InitialModel = Field(default_factory=InitialModel)
    horizons: HorizonsModel = Field(default_factory=HorizonsModel)
    epsilon_grid: List[float] = Field(default_factory=lambda: [0.05, 0.2, 0.35, 0.5])
    integrator: IntegratorModel = Field(default_factory=IntegratorModel)
    fiber: FiberModel = Field(default_factory=FiberModel)
    metric: MetricModel = Field(default_factory=MetricModel)
    sampler: SamplerModel = Field(default_factory=SamplerModel)
    tracking: TrackingModel = Field(default_factory=TrackingModel)
    tipping: TippingModel = Field(default_factory=TippingModel)
    output: OutputModel = Field(default_factory=OutputModel)
    seed: int = 42

    @field_validator("epsilon_grid")
    @classmethod
    def _eps(cls, v):
        if not v:
            raise ValueError("epsilon_grid must be nonempty")
        if any(not (0 < e <= 1) for e in v):
            raise ValueError("epsilon values must lie in (0, 1]")
        return v

    @model_validator(mode="after")
    def _dims(self):
        k = len({t.frequency for t in self.forcing.terms})
        if self.theta0 is not None and len(self.theta0) != k:
            raise ValueError(f"theta0 has {len(self.theta0)} entries, the forcing torus has dimension {k}")
        if len(self.initial.y0) != 1:
            raise ValueError("the Riccati layer has a scalar fast variable: initial.y0 needs one entry")
        if len(self.initial.x0) != 1:
            raise ValueError("the coupling maps take a scalar slow variable: initial.x0 needs one entry")
        return self

    # builders -------------------------------------------------------------

    def build_forcing(self):
        return self.forcing.build()

    def build_gamma(self):
        return self.gamma.build()

    def build_layer(self):
        return riccati_layer(self.build_forcing(), self.build_gamma())

    def build_scenario(self) -> SlowFastScenario:
        return SlowFastScenario(
            self.slow_field.build(),
            self.build_layer(),
            tuple(self.initial.x0),
            tuple(self.initial.y0),
            self.horizons.t0,
            tuple(self.epsilon_grid),
            None if self.theta0 is None else tuple(self.theta0),
            self.name,
        )

    def build_transition(self) -> TransitionScenario:
        return TransitionScenario(
            self.build_gamma(),
            self.build_forcing(),
            None if self.theta0 is None else tuple(self.theta0),
            self.tipping.band,
            self.tipping.final_fraction,
            self.tipping.gamma_tol,
            self.fiber.spinup,
            self.tipping.pair_window,
        )

    def build_integrator(self) -> IntegratorConfig:
        return self.integrator.build()

    def build_sampler(self) -> NeighborhoodSampler:
        return self.sampler.build(self.seed)

    def build_seeds(self) -> Optional[SeedBox]:
        if self.fiber.seed_lower is None:
            return None
        return SeedBox(tuple(self.fiber.seed_lower), tuple(self.fiber.seed_upper), self.fiber.spacing, self.fiber.relative)


def _format_error(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        path = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{path}: {e['msg']}")
    return "; ".join(lines)


def parse_config(data: dict) -> ScenarioConfig:
    try:
        return ScenarioConfig.model_validate(data or {})
    except ValidationError as e:
        raise ConfigError(_format_error(e)) from None


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text()
    try:
        data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (yaml.YAMLError, json.JSONDecodeError) as e:
        raise ConfigError(f"{path}: cannot parse: {e}") from None
    if data is not None and not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return parse_config(data)


def dump_config(cfg: ScenarioConfig, fmt: str = "yaml") -> str:
    data = cfg.model_dump(mode="json")
    if fmt == "json":
        return json.dumps(data, indent=2, sort_keys=True)
    return yaml.safe_dump(data, sort_keys=True)
