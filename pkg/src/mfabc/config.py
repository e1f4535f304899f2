"""Experiment configuration: schema, loading and construction of library objects.

Configs are YAML (or JSON, which YAML also parses) with unknown keys
rejected.  A minimal run config::

    model:
      name: repressilator
    distance:
      epsilon: 50
    campaign:
      eta: {kind: fixed, eta1: 0.25, eta2: 0.12}
      stop: {n: 1000}
    seed: 1
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, model_validator

from .experiments import repressilator_functions
from .mf_tuning import DEFAULT_FLOORS
from .problems import BernoulliToy, Problem, RepressilatorProblem, ViralProblem
from .samplers import AdaptiveEta, CampaignSpec, FixedEta, OptimalEta, StopRule


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ToyRates(_Strict):
    p_tp: float = Field(0.10, ge=0, le=1)
    p_fp: float = Field(0.02, ge=0, le=1)
    p_fn: float = Field(0.03, ge=0, le=1)
    c_lo: PositiveFloat = 1.0
    c_p: float = Field(5.0, ge=0)
    c_n: float = Field(5.0, ge=0)


class ModelConfig(_Strict):
    name: Literal["repressilator", "viral", "toy"] = "repressilator"
    parameters: dict[str, float] = Field(default_factory=dict)
    tau: PositiveFloat = 0.1
    adapt: float = Field(0.05, ge=0)
    cells: PositiveInt = 10
    prior_base: float = Field(1.5, gt=1)
    detection_threshold: float = 3.0
    cost_model: Literal["wall", "events"] = "wall"
    toy: ToyRates = Field(default_factory=ToyRates)


class DistanceConfig(_Strict):
    epsilon: PositiveFloat
    epsilon_lo: Optional[PositiveFloat] = None


class EtaConfig(_Strict):
    kind: Literal["fixed", "optimal", "adaptive"] = "fixed"
    eta1: float = Field(1.0, gt=0, le=1)
    eta2: float = Field(1.0, gt=0, le=1)
    report: Optional[str] = None
    mode: Literal["early_accept_reject", "early_rejection", "early_decision"] = \
        "early_accept_reject"
    burn_in: PositiveInt = 1000
    floors: tuple[float, float] = DEFAULT_FLOORS
    objective: str = "ess"
    gate: Literal["checked", "all"] = "checked"
    freeze_after: Union[PositiveInt, Literal["default", "never"]] = "default"

    @model_validator(mode="after")
    def _check(self):
        if self.kind == "optimal" and self.report is None:
            raise ValueError("optimal continuation probabilities need 'report'")
        for f in self.floors:
            if not 0 < f <= 1:
                raise ValueError("floors must lie in (0, 1]")
        return self


class StopConfig(_Strict):
    n: Optional[PositiveInt] = None
    budget: Optional[PositiveFloat] = None

    @model_validator(mode="after")
    def _one(self):
        if (self.n is None) == (self.budget is None):
            raise ValueError("give exactly one of 'n' and 'budget'")
        return self


class CampaignConfig(_Strict):
    eta: EtaConfig = Field(default_factory=EtaConfig)
    stop: StopConfig = Field(default_factory=lambda: StopConfig(n=1000))
    coupling: bool = True


class BenchmarkConfig(_Strict):
    n: Optional[PositiveInt] = None


class StudyConfig(_Strict):
    kinds: list[Literal["efficiency", "variance", "burn_in"]] = \
        Field(default_factory=lambda: ["efficiency"])
    table: Optional[str] = None
    subsample: Optional[PositiveInt] = None
    repeats: Optional[PositiveInt] = None
    variance_repeats: Optional[PositiveInt] = None
    budget: Optional[PositiveFloat] = None
    functions: list[str] = Field(default_factory=lambda: ["F1", "F2", "F3"])
    burn_in: Optional[PositiveInt] = None
    phase: Optional[PositiveInt] = None
    burn_in_repeats: Optional[PositiveInt] = None
    floors: tuple[float, float] = DEFAULT_FLOORS


class TuneConfig(_Strict):
    table: Optional[str] = None
    mode: Literal["early_accept_reject", "early_rejection", "early_decision"] = \
        "early_accept_reject"
    function: Optional[str] = None
    floors: tuple[float, float] = DEFAULT_FLOORS


class ExperimentConfig(_Strict):
    """Top-level schema shared by all subcommands."""

    model: ModelConfig = Field(default_factory=ModelConfig)
    distance: DistanceConfig
    campaign: CampaignConfig = Field(default_factory=CampaignConfig)
    benchmark: BenchmarkConfig = Field(default_factory=BenchmarkConfig)
    study: StudyConfig = Field(default_factory=StudyConfig)
    tune: TuneConfig = Field(default_factory=TuneConfig)
    seed: int = Field(0, ge=0)
    out: str = "out"
    scale: Literal["desk", "paper"] = "desk"
    workers: Optional[PositiveInt] = None


SCALES = {
    "desk": {"benchmark_n": 10_000, "subsample": 200, "repeats": 50, "variance_repeats": 500,
             "burn_in": 100, "phase": 400, "burn_in_repeats": 10},
    "paper": {"benchmark_n": 5_000_000, "subsample": 10_000, "repeats": 500,
              "variance_repeats": 5000, "burn_in": 1000, "phase": 10_000,
              "burn_in_repeats": 100},
}


def scaled(cfg: ExperimentConfig, key: str, value=None):
    """``value`` if set, otherwise the preset for ``cfg.scale``."""
    return value if value is not None else SCALES[cfg.scale][key]


class ConfigError(ValueError):
    """Config file is unreadable as YAML/JSON or violates the schema."""


def load_config(path) -> ExperimentConfig:
    """Parse and validate a YAML or JSON config file.

    Raises:
        OSError: The file cannot be read.
        ConfigError: Syntax error.
        pydantic.ValidationError: Schema violation.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text) if str(path).endswith(".json") else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return ExperimentConfig.model_validate(data)


def build_problem(cfg: ExperimentConfig) -> Problem:
    m = cfg.model
    eps = cfg.distance.epsilon
    eps_lo = cfg.distance.epsilon_lo if cfg.distance.epsilon_lo is not None else eps
    if m.name == "repressilator":
        return RepressilatorProblem(seed=cfg.seed, tau=m.tau, adapt=m.adapt, epsilon=eps,
                                    epsilon_lo=eps_lo, parameters=m.parameters or None,
                                    cost_model=m.cost_model)
    if m.name == "viral":
        return ViralProblem(seed=cfg.seed, cells=m.cells, epsilon=eps, epsilon_lo=eps_lo,
                            threshold=m.detection_threshold, prior_base=m.prior_base,
                            cost_model=m.cost_model)
    t = m.toy
    return BernoulliToy(t.p_tp, t.p_fp, t.p_fn, t.c_lo, t.c_p, t.c_n)


def resolve_function(name: str, param_names=()):
    """Test function by name: ``F1``/``F2``/``F3``, ``constant`` or ``param:<name>``."""
    named = repressilator_functions()
    if name in named:
        return named[name]
    if name == "constant":
        return lambda th: 1.0
    if name.startswith("param:"):
        col = list(param_names).index(name.split(":", 1)[1])
        return lambda th: float(th[col])
    raise ConfigError(f"unknown function {name!r}")


def build_campaign(cfg: ExperimentConfig, problem: Problem, workers: int = 1) -> CampaignSpec:
    e = cfg.campaign.eta
    if e.kind == "fixed":
        source = FixedEta(e.eta1, e.eta2)
    elif e.kind == "optimal":
        source = OptimalEta(report_path=e.report, mode=e.mode, floors=tuple(e.floors))
    else:
        objective = "ess" if e.objective == "ess" else resolve_function(e.objective,
                                                                        problem.param_names)
        freeze = {"default": "default", "never": None}.get(e.freeze_after, e.freeze_after)
        source = AdaptiveEta(e.burn_in, tuple(e.floors), objective, e.gate, freeze)
    s = cfg.campaign.stop
    return CampaignSpec(problem, source, StopRule(n=s.n, budget=s.budget), seed=cfg.seed,
                        coupling=cfg.campaign.coupling, workers=workers)
