"""Experiment configuration: YAML schema, parsing, and serialization.

A run config is a single YAML document, versioned by ``schema_version``:

    schema_version: 1
    scenario: three_rings          # three_rings | gaussian_shift |
                                   # gaussian_mixture | student_teacher
    n_source: 150
    n_target: 150
    seed: 0
    output_dir: runs/demo
    scenario_params: {}            # per-scenario overrides, see datasets
    kernel:
      family: gaussian             # gaussian | imq | neural
      bandwidth: 0.3
    flow:
      step_size: 1.0e-3
      n_max: 1000
      noise_level: 0.0
      snapshot_every: 100
      lam:
        mode: adaptive             # adaptive | fixed
        initial: 0.1
        regularity: 0.5
        floor: 1.0e-3
        ceiling: 1.0
    algorithms:
      - name: drmmd
      - name: mmd
        overrides:
          flow: {step_size: 1.0e-2}

parse(serialize(cfg)) round-trips to an equal config.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .exceptions import ConfigError
from .flow import AdaptiveLambda, FixedLambda, FlowConfig

__all__ = [
    "SCHEMA_VERSION",
    "KernelSection",
    "LambdaSection",
    "FlowSection",
    "AlgorithmSection",
    "ExperimentConfig",
    "parse_config",
    "parse_config_file",
    "serialize_config",
]

SCHEMA_VERSION = 1

SCENARIOS = ("three_rings", "gaussian_shift", "gaussian_mixture", "student_teacher")
ALGORITHMS = ("drmmd", "mmd")
KERNEL_FAMILIES = ("gaussian", "imq", "neural")


@dataclass(frozen=True)
class KernelSection:
    family: str = "gaussian"
    bandwidth: float = 0.3
    offset: float = 1.0
    input_dim: int = 50
    hidden_dim: int = 3
    z_batch_size: int = 100

    def __post_init__(self):
        if self.family not in KERNEL_FAMILIES:
            raise ConfigError(f"unknown kernel family {self.family!r}")
        if self.bandwidth <= 0 or self.offset <= 0:
            raise ConfigError("kernel hyperparameters must be positive")


@dataclass(frozen=True)
class LambdaSection:
    mode: str = "adaptive"
    value: float = 0.1  # fixed mode
    initial: float = 0.1  # adaptive mode
    regularity: float = 0.5
    floor: float = 1e-3
    ceiling: float = 1.0

    def __post_init__(self):
        if self.mode not in ("fixed", "adaptive"):
            raise ConfigError(f"unknown lam mode {self.mode!r}")
        self.to_mode()  # validate eagerly

    def to_mode(self) -> FixedLambda | AdaptiveLambda:
        try:
            if self.mode == "fixed":
                return FixedLambda(self.value)
            return AdaptiveLambda(
                initial=self.initial,
                regularity=self.regularity,
                floor=self.floor,
                ceiling=self.ceiling,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


@dataclass(frozen=True)
class FlowSection:
    step_size: float = 1e-3
    n_max: int = 1000
    noise_level: float = 0.0
    snapshot_every: int = 100
    lam: LambdaSection = field(default_factory=LambdaSection)

    def __post_init__(self):
        self.to_flow_config(seed=0)  # validate eagerly

    def to_flow_config(self, seed: int) -> FlowConfig:
        try:
            return FlowConfig(
                step_size=self.step_size,
                n_max=self.n_max,
                lam_mode=self.lam.to_mode(),
                noise_level=self.noise_level,
                snapshot_every=self.snapshot_every,
                seed=seed,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


@dataclass(frozen=True)
class AlgorithmSection:
    name: str
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.name!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str = "three_rings"
    n_source: int = 150
    n_target: int = 150
    seed: int = 0
    output_dir: str = "runs/out"
    scenario_params: dict = field(default_factory=dict)
    kernel: KernelSection = field(default_factory=KernelSection)
    flow: FlowSection = field(default_factory=FlowSection)
    algorithms: tuple[AlgorithmSection, ...] = (AlgorithmSection("drmmd"),)
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}")
        if self.n_source < 1 or self.n_target < 1:
            raise ConfigError("n_source and n_target must be >= 1")
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(
                f"unsupported schema_version {self.schema_version} (expected {SCHEMA_VERSION})"
            )


def _build(section_cls, data: dict, context: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{context} must be a mapping")
    names = {f.name for f in dataclasses.fields(section_cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown {context} keys: {sorted(unknown)}")
    return data


def _parse_flow(data: dict) -> FlowSection:
    data = dict(_build(FlowSection, data, "flow"))
    lam = data.pop("lam", {})
    lam = LambdaSection(**_build(LambdaSection, lam, "flow.lam"))
    try:
        return FlowSection(lam=lam, **data)
    except TypeError as exc:
        raise ConfigError(f"bad flow section: {exc}") from exc


def parse_config(text: str) -> ExperimentConfig:
    """Parse a YAML config document; raises ConfigError on any problem."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    raw = dict(raw)
    try:
        kernel = KernelSection(**_build(KernelSection, raw.pop("kernel", {}), "kernel"))
        flow = _parse_flow(raw.pop("flow", {}))
        algo_raw = raw.pop("algorithms", [{"name": "drmmd"}])
        if not isinstance(algo_raw, list) or not algo_raw:
            raise ConfigError("algorithms must be a nonempty list")
        algorithms = tuple(
            AlgorithmSection(**_build(AlgorithmSection, a, "algorithm")) for a in algo_raw
        )
        _build(ExperimentConfig, raw, "config")
        return ExperimentConfig(kernel=kernel, flow=flow, algorithms=algorithms, **raw)
    except TypeError as exc:
        raise ConfigError(f"bad config: {exc}") from exc


def parse_config_file(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


def _plain(value):
    if dataclasses.is_dataclass(value):
        return {f.name: _plain(getattr(value, f.name)) for f in dataclasses.fields(value)}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    return value


def serialize_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(_plain(cfg), sort_keys=False)
