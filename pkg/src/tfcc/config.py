"""Scenario and experiment configuration.

Scenario files are YAML mappings with one key per :class:`ScenarioConfig`
field. Missing keys take their defaults, unknown keys are rejected.
"""
from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml


class ConfigError(ValueError):
    pass


class Protocol(str, enum.Enum):
    TFCC = "TFCC"
    NO_TRUST = "NO_TRUST"
    NO_RATE_CONTROL = "NO_RATE_CONTROL"

    @property
    def uses_trust(self) -> bool:
        return self is not Protocol.NO_TRUST

    @property
    def uses_rate_control(self) -> bool:
        return self is not Protocol.NO_RATE_CONTROL


# (lower, upper, lower_inclusive, upper_inclusive)
_BOUNDS: dict[str, tuple[float, float, bool, bool]] = {
    "node_count": (2, math.inf, True, False),
    "field_width_m": (0, math.inf, False, False),
    "field_height_m": (0, math.inf, False, False),
    "radio_range_m": (0, math.inf, False, False),
    "malicious_fraction": (0, 1, True, True),
    "dropper_weight": (0, math.inf, True, False),
    "flooder_weight": (0, math.inf, True, False),
    "delayer_weight": (0, math.inf, True, False),
    "drop_probability": (0, 1, True, True),
    "dup_factor": (2, math.inf, True, False),
    "extra_delay_s": (0, math.inf, True, False),
    "trust_threshold": (0, 1, True, True),
    "initial_trust": (0, 1, True, True),
    "trust_window_packets": (1, math.inf, True, False),
    "trust_window_s": (0, math.inf, False, False),
    "epsilon": (0, 1, False, False),
    "queue_capacity": (1, math.inf, True, False),
    "c_min_fraction": (0, 1, True, False),
    "c_max_fraction": (0, 1, False, True),
    "traffic_rate": (0, math.inf, False, False),
    "link_rate": (0, math.inf, False, False),
    "packet_size": (0, math.inf, False, False),
    "e_tx": (0, math.inf, True, False),
    "e_rx": (0, math.inf, True, False),
    "battery_full": (0, math.inf, False, False),
    "duration_s": (0, math.inf, False, False),
    "control_interval_s": (0, math.inf, False, False),
    "sample_interval_s": (0, math.inf, False, False),
    "warmup_s": (0, math.inf, True, False),
}

_INT_FIELDS = {"node_count", "dup_factor", "trust_window_packets", "queue_capacity"}


@dataclass(frozen=True)
class ScenarioConfig:
    node_count: int = 100
    field_width_m: float = 50.0
    field_height_m: float = 50.0
    radio_range_m: float = 12.0
    malicious_fraction: float = 0.5
    exact_malicious_count: bool = False
    # relative weights of the malicious behaviour models
    dropper_weight: float = 0.7
    flooder_weight: float = 0.3
    delayer_weight: float = 0.0
    drop_probability: float = 1.0
    dup_factor: int = 3
    extra_delay_s: float = 0.5
    trust_threshold: float = 0.5
    initial_trust: float = 0.6
    trust_window_packets: int = 100
    trust_window_s: float = 5.0
    epsilon: float = 0.05
    queue_capacity: int = 40
    c_min_fraction: float = 0.25
    c_max_fraction: float = 0.85
    traffic_rate: float = 2.0
    link_rate: float = 50.0
    packet_size: float = 1.0
    e_tx: float = 2.0
    e_rx: float = 1.0
    battery_full: float = 1e5
    duration_s: float = 120.0
    control_interval_s: float = 1.0
    sample_interval_s: float = 1.0
    warmup_s: float = 20.0
    protocol: Protocol = Protocol.TFCC

    def __post_init__(self):
        for name, (lo, hi, lo_inc, hi_inc) in _BOUNDS.items():
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{name}: expected a number, got {value!r}")
            if name in _INT_FIELDS and value != int(value):
                raise ConfigError(f"{name}: expected an integer, got {value!r}")
            ok_lo = value >= lo if lo_inc else value > lo
            ok_hi = value <= hi if hi_inc else value < hi
            if not (ok_lo and ok_hi):
                lb = "[" if lo_inc else "("
                ub = "]" if hi_inc else ")"
                raise ConfigError(f"{name}={value!r} outside {lb}{lo}, {hi}{ub}")
        if self.c_min_fraction >= self.c_max_fraction:
            raise ConfigError("c_min_fraction must be below c_max_fraction")
        if self.malicious_fraction > 0 and not (self.dropper_weight + self.flooder_weight
                                                 + self.delayer_weight) > 0:
            raise ConfigError("malicious_fraction > 0 needs a positive behaviour weight")
        if not isinstance(self.exact_malicious_count, bool):
            raise ConfigError("exact_malicious_count: expected true or false")
        if not isinstance(self.protocol, Protocol):
            try:
                object.__setattr__(self, "protocol", Protocol(self.protocol))
            except ValueError:
                choices = ", ".join(p.value for p in Protocol)
                raise ConfigError(f"protocol={self.protocol!r} not one of {choices}") from None
        for name in _INT_FIELDS:
            object.__setattr__(self, name, int(getattr(self, name)))

    @property
    def c_min(self) -> float:
        return self.c_min_fraction * self.queue_capacity

    @property
    def c_max(self) -> float:
        return self.c_max_fraction * self.queue_capacity

    @property
    def tx_time(self) -> float:
        return self.packet_size / self.link_rate

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        out = dataclasses.asdict(self)
        out["protocol"] = self.protocol.value
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any] | None) -> "ScenarioConfig":
        data = dict(data or {})
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown scenario keys: {', '.join(unknown)}")
        return cls(**data)


def parse_scenario(path) -> ScenarioConfig:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"scenario file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from exc
    if data is not None and not isinstance(data, Mapping):
        raise ConfigError(f"{path}: top level must be a mapping")
    return ScenarioConfig.from_dict(data)


def dump_scenario(config: ScenarioConfig) -> str:
    return yaml.safe_dump(config.to_dict(), sort_keys=False)


def reference_scenario_path() -> Path:
    return Path(__file__).parent / "data" / "paper.scenario"


@dataclass(frozen=True)
class Variant:
    name: str
    protocol: Protocol
    overrides: Mapping[str, Any] = field(default_factory=dict)

    def apply(self, base: ScenarioConfig) -> ScenarioConfig:
        return ScenarioConfig.from_dict({**base.to_dict(), **self.overrides,
                                         "protocol": self.protocol.value})


@dataclass(frozen=True)
class ExperimentSpec:
    base: ScenarioConfig
    variants: tuple[Variant, ...]
    seeds: tuple[int, ...]
    output_dir: Path

    def __post_init__(self):
        if not self.variants:
            raise ConfigError("variants: at least one variant required")
        if not self.seeds:
            raise ConfigError("seeds: at least one seed required")
        names = [v.name for v in self.variants]
        if len(set(names)) != len(names):
            raise ConfigError("variants: names must be unique")


def parse_experiment(path, output_dir=None) -> ExperimentSpec:
    """Load an experiment file.

    Keys: ``scenario`` (path relative to the file, or an inline mapping),
    ``variants`` (list of ``{name, protocol, overrides}``), ``seeds`` and
    ``output_dir``.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"experiment file not found: {path}")
    data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    unknown = sorted(set(data) - {"scenario", "variants", "seeds", "output_dir"})
    if unknown:
        raise ConfigError(f"unknown experiment keys: {', '.join(unknown)}")
    scenario = data.get("scenario")
    if isinstance(scenario, str):
        base = parse_scenario(path.parent / scenario)
    else:
        base = ScenarioConfig.from_dict(scenario)
    variants = []
    for i, v in enumerate(data.get("variants") or []):
        try:
            proto = Protocol(v.get("protocol", "TFCC"))
        except ValueError:
            raise ConfigError(f"variants[{i}].protocol={v.get('protocol')!r} is not a protocol") from None
        variants.append(Variant(str(v.get("name", proto.value)), proto, dict(v.get("overrides") or {})))
    seeds = tuple(int(s) for s in (data.get("seeds") or []))
    out = Path(output_dir if output_dir is not None else data.get("output_dir", "results"))
    spec = ExperimentSpec(base, tuple(variants), seeds, out)
    for v in spec.variants:
        v.apply(base)  # surface override errors before anything runs
    return spec
