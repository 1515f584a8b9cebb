"""Experiment configuration: YAML file -> nested dataclasses, unknown keys rejected."""
from __future__ import annotations

import dataclasses
import hashlib
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .annealer import AnnealSchedule, MachineConfig, SmtjAssignment, UpdateMode, UpdateOrder
from .devices import DeviceSpread, DriftModel, ProgramVerifyConfig, SmtjDevice
from .errors import ContractError


@dataclass
class ScheduleSpec:
    v_start: float = 0.035
    v_end: float = 0.25
    updates_per_step: int = 50
    total_updates: int = 7200
    v_ref: float = 0.25

    def build(self) -> AnnealSchedule:
        return AnnealSchedule(self.v_start, self.v_end, self.updates_per_step, self.total_updates, self.v_ref)


@dataclass
class MachineSpec:
    mode: str = "hw"
    order: str = "sequential"
    assignment: str = "per_trial"
    pulse_width: float = 50e-6
    mac_noise: float = 0.01
    snapshot_stride: int = 0
    hardware_faithful: bool = True

    def build(self, seed: int) -> MachineConfig:
        try:
            return MachineConfig(
                mode=UpdateMode(self.mode),
                order=UpdateOrder(self.order),
                assignment=SmtjAssignment(self.assignment),
                pulse_width=self.pulse_width,
                rng_seed=seed,
                mac_noise=self.mac_noise,
                snapshot_stride=self.snapshot_stride,
            )
        except ValueError as exc:
            raise ContractError(f"machine: {exc}") from None


@dataclass
class DeviceSpec:
    K: float = SmtjDevice.K
    v_half: float = SmtjDevice.v_half
    r_p: float = SmtjDevice.r_p
    r_ap: float = SmtjDevice.r_ap
    r_series: float = SmtjDevice.r_series
    v_compliance: float = SmtjDevice.v_compliance
    rate_scale: float = SmtjDevice.rate_scale
    read_noise_ohm: float = 0.0

    def build(self) -> SmtjDevice:
        return SmtjDevice(**dataclasses.asdict(self))


@dataclass
class SpreadSpec:
    K_rel: float = 0.0
    v_half_abs: float = 0.0
    rate_rel: float = 0.0

    def build(self) -> DeviceSpread:
        return DeviceSpread(self.K_rel, self.v_half_abs, self.rate_rel)


@dataclass
class ProgrammingSpec:
    tolerance: float = 3.0
    max_pulses: int = 200
    per_pulse_noise_sigma: float = 1.0
    settle_check: bool = True
    allow_degraded: bool = False

    def build(self) -> ProgramVerifyConfig:
        return ProgramVerifyConfig(self.tolerance, self.max_pulses, self.per_pulse_noise_sigma, self.settle_check)


@dataclass
class DriftSpec:
    elapsed_hours: float = 720.0
    sigma_per_decade: float = 1.5
    bound: float = 15.0

    def build(self) -> DriftModel:
        return DriftModel(self.sigma_per_decade, self.bound)


@dataclass
class ExperimentConfig:
    problem: str
    graph: str
    g_scale: float
    levels: list[float]
    A: float = 1.0
    colors: int | None = None
    trials: int = 10
    seed: int = 0
    schedule: ScheduleSpec = field(default_factory=ScheduleSpec)
    machine: MachineSpec = field(default_factory=MachineSpec)
    device: DeviceSpec = field(default_factory=DeviceSpec)
    device_spread: SpreadSpec = field(default_factory=SpreadSpec)
    programming: ProgrammingSpec = field(default_factory=ProgrammingSpec)
    drift: DriftSpec | None = None
    sweep: dict[str, list] = field(default_factory=dict)
    base_dir: str = field(default=".", metadata={"internal": True})

    @property
    def graph_path(self) -> Path:
        return (Path(self.base_dir) / self.graph).resolve()

    def validate(self) -> "ExperimentConfig":
        if self.problem not in ("maxcut", "coloring"):
            raise ContractError(f"problem must be 'maxcut' or 'coloring', got {self.problem!r}")
        if self.problem == "coloring" and (self.colors is None or self.colors < 2):
            raise ContractError("coloring needs colors >= 2")
        if self.problem == "maxcut" and self.colors is not None:
            raise ContractError("colors only applies to coloring problems")
        if not self.graph_path.is_file():
            raise ContractError(f"graph file not found: {self.graph_path}")
        if self.trials < 1:
            raise ContractError("trials must be >= 1")
        if self.A <= 0 or self.g_scale <= 0:
            raise ContractError("A and g_scale must be positive")
        if not 0 <= self.seed < 2**64:
            raise ContractError("seed must be a 64-bit unsigned integer")
        self.schedule.build()
        self.machine.build(self.seed)
        self.device.build()
        self.programming.build()
        if self.drift is not None:
            self.drift.build()
        for key, values in self.sweep.items():
            if not isinstance(values, list) or not values:
                raise ContractError(f"sweep.{key} must be a nonempty list")
            get_dotted(self, key)
        return self

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("base_dir")
        return d

    def graph_digest(self) -> str:
        return hashlib.sha256(self.graph_path.read_bytes()).hexdigest()


def _from_dict(cls, data, where: str):
    if not isinstance(data, dict):
        raise ContractError(f"{where or 'config'}: expected a mapping")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls) if not f.metadata.get("internal")}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ContractError(f"{where or 'config'}: unknown keys {unknown}")
    kwargs = {}
    for name, value in data.items():
        tp = hints[name]
        inner = [a for a in typing.get_args(tp) if a is not type(None)]
        target = inner[0] if inner and typing.get_origin(tp) in (typing.Union, types.UnionType) else tp
        if dataclasses.is_dataclass(target) and value is not None:
            kwargs[name] = _from_dict(target, value, f"{where}{name}.")
        else:
            kwargs[name] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ContractError(f"{where or 'config'}: {exc}") from None


def config_from_dict(data: dict, base_dir=".") -> ExperimentConfig:
    cfg = _from_dict(ExperimentConfig, data, "")
    cfg.base_dir = str(base_dir)
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ContractError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ContractError(f"{path}: {exc}") from None
    return config_from_dict(data or {}, path.parent)


def get_dotted(cfg, key: str):
    obj = cfg
    for part in key.split("."):
        if obj is None or not dataclasses.is_dataclass(obj) or part not in {f.name for f in dataclasses.fields(obj)}:
            raise ContractError(f"unknown config key {key!r}")
        obj = getattr(obj, part)
    return obj


def with_dotted(cfg: ExperimentConfig, key: str, value) -> ExperimentConfig:
    """Copy of cfg with one dotted key replaced, e.g. ``schedule.v_end``."""
    get_dotted(cfg, key)
    head, _, rest = key.partition(".")
    if not rest:
        return dataclasses.replace(cfg, **{head: value})
    return dataclasses.replace(cfg, **{head: with_dotted(getattr(cfg, head), rest, value)})
