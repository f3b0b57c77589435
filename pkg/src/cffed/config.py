"""Experiment configuration: one JSON document merged over built-in defaults."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .channel import ChannelParams, Clutter
from .energy import EnergyParams
from .orchestrator import SolveOptions
from .scenario import ScenarioConfig


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending field path."""


@dataclass(frozen=True)
class SweepAxes:
    rates_mbps: tuple = (20.0, 40.0, 60.0, 80.0, 96.0)
    csp_counts: tuple = (15, 30, 60)
    antenna_counts: tuple = (8, 16, 32)
    federation_counts: tuple = (1, 2, 3, 4)
    # explicit (S, M) pairs replace the csp x antenna product when given
    configurations: tuple = ()

    def __post_init__(self):
        for name in ("rates_mbps", "csp_counts", "antenna_counts", "federation_counts"):
            vals = tuple(getattr(self, name))
            if not vals:
                raise ValueError(f"{name} must not be empty")
            object.__setattr__(self, name, vals)
        if any(r < 0 for r in self.rates_mbps):
            raise ValueError("rates_mbps must be non-negative")
        for name in ("csp_counts", "antenna_counts", "federation_counts"):
            if any(int(v) != v or v < 1 for v in getattr(self, name)):
                raise ValueError(f"{name} must hold positive integers")
        pairs = tuple(tuple(int(v) for v in p) for p in self.configurations)
        if any(len(p) != 2 or min(p) < 1 for p in pairs):
            raise ValueError("configurations must be [S, M] pairs of positive integers")
        object.__setattr__(self, "configurations", pairs)

    def pairs(self) -> list:
        if self.configurations:
            return sorted(self.configurations)
        return [(int(s), int(m)) for s in sorted(self.csp_counts) for m in sorted(self.antenna_counts)]

    def to_dict(self) -> dict:
        return {
            "rates_mbps": list(self.rates_mbps),
            "csp_counts": list(self.csp_counts),
            "antenna_counts": list(self.antenna_counts),
            "federation_counts": list(self.federation_counts),
            "configurations": [list(p) for p in self.configurations],
        }


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioConfig = ScenarioConfig()
    channel: ChannelParams = ChannelParams()
    energy: EnergyParams = EnergyParams()
    solver: SolveOptions = SolveOptions()
    sweep: SweepAxes = SweepAxes()
    drops: int = 10
    out_path: str = "results.csv"
    workers: int = 1
    record_wall_time: bool = False

    def __post_init__(self):
        if self.drops < 1:
            raise ConfigError("drops: must be at least 1")
        if self.workers < 1:
            raise ConfigError("workers: must be at least 1")

    def to_dict(self) -> dict:
        channel = dataclasses.asdict(self.channel)
        return {
            "scenario": self.scenario.to_dict(),
            "channel": channel,
            "energy": self.energy.to_dict(),
            "solver": self.solver.to_dict(),
            "sweep": self.sweep.to_dict(),
            "drops": self.drops,
            "out_path": self.out_path,
            "workers": self.workers,
            "record_wall_time": self.record_wall_time,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form, ignoring where output goes."""
        doc = self.to_dict()
        doc.pop("out_path")
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def with_overrides(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


# -- parsing ------------------------------------------------------------------------

_SECTIONS = ("scenario", "channel", "energy", "solver", "sweep")
_TOP_LEVEL = ("drops", "out_path", "workers", "record_wall_time")


def _build(cls, data, path: str, base):
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object, got {type(data).__name__}")
    known = {f.name: f for f in dataclasses.fields(cls)}
    for key in data:
        if key not in known:
            raise ConfigError(f"{path}.{key}: unknown field")
    values = {}
    for name, f in known.items():
        current = getattr(base, name)
        if name not in data:
            values[name] = current
            continue
        raw = data[name]
        values[name] = _coerce(raw, current, f"{path}.{name}")
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _coerce(raw, current, path):
    if dataclasses.is_dataclass(current):
        return _build(type(current), raw, path, current)
    if isinstance(current, bool):
        if not isinstance(raw, bool):
            raise ConfigError(f"{path}: expected true/false")
        return raw
    if isinstance(current, int) and not isinstance(current, bool):
        if isinstance(raw, bool) or not isinstance(raw, (int, float)) or int(raw) != raw:
            raise ConfigError(f"{path}: expected an integer")
        return int(raw)
    if isinstance(current, float):
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise ConfigError(f"{path}: expected a number")
        return float(raw)
    if isinstance(current, tuple):
        if not isinstance(raw, list):
            raise ConfigError(f"{path}: expected a list")
        return tuple(tuple(v) if isinstance(v, list) else v for v in raw)
    if isinstance(current, str):
        if not isinstance(raw, str):
            raise ConfigError(f"{path}: expected a string")
        return raw
    if current is None:
        if raw is not None and (isinstance(raw, bool) or not isinstance(raw, (int, float))):
            raise ConfigError(f"{path}: expected a number or null")
        return raw
    raise ConfigError(f"{path}: unsupported value")


def _solver_from(data, base: SolveOptions, path="solver") -> SolveOptions:
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object")
    data = dict(data)
    milp = base.milp
    if "node_limit" in data:
        limit = data.pop("node_limit")
        if isinstance(limit, bool) or not isinstance(limit, int) or limit < 1:
            raise ConfigError(f"{path}.node_limit: expected a positive integer")
        milp = dataclasses.replace(milp, node_limit=limit)
    scalar = {"lam", "max_outer_iters", "tol_obj", "slack_tol", "random_trials", "seed"}
    for key in data:
        if key not in scalar:
            raise ConfigError(f"{path}.{key}: unknown field")
    values = {}
    for key in scalar:
        cur = getattr(base, key)
        if key not in data:
            values[key] = cur
        elif key in ("lam", "seed"):
            raw = data[key]
            if raw is not None and (isinstance(raw, bool) or not isinstance(raw, (int, float))):
                raise ConfigError(f"{path}.{key}: expected a number or null")
            values[key] = None if raw is None else (int(raw) if key == "seed" else float(raw))
        else:
            values[key] = _coerce(data[key], cur, f"{path}.{key}")
    try:
        return dataclasses.replace(base, milp=milp, **values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _channel_from(data, base: ChannelParams) -> ChannelParams:
    if isinstance(data, dict) and isinstance(data.get("clutter"), dict):
        data = dict(data)
        clutter = _build(Clutter, data.pop("clutter"), "channel.clutter", base.clutter)
        base = dataclasses.replace(base, clutter=clutter)
    return _build(ChannelParams, data, "channel", base)


def config_from_dict(doc: dict, base: ExperimentConfig | None = None) -> ExperimentConfig:
    base = base or ExperimentConfig()
    if not isinstance(doc, dict):
        raise ConfigError("<root>: expected a JSON object")
    for key in doc:
        if key not in _SECTIONS + _TOP_LEVEL:
            raise ConfigError(f"{key}: unknown field")
    parts = {}
    if "scenario" in doc:
        parts["scenario"] = _build(ScenarioConfig, doc["scenario"], "scenario", base.scenario)
    if "channel" in doc:
        parts["channel"] = _channel_from(doc["channel"], base.channel)
    if "energy" in doc:
        parts["energy"] = _build(EnergyParams, doc["energy"], "energy", base.energy)
    if "solver" in doc:
        parts["solver"] = _solver_from(doc["solver"], base.solver)
    if "sweep" in doc:
        parts["sweep"] = _build(SweepAxes, doc["sweep"], "sweep", base.sweep)
    for key in _TOP_LEVEL:
        if key in doc:
            parts[key] = _coerce(doc[key], getattr(base, key), key)
    return dataclasses.replace(base, **parts)


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"<file>: cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"<file>: {path} is not valid JSON ({exc.msg} at line {exc.lineno})") from None
    return config_from_dict(doc)


__all__ = ["ConfigError", "ExperimentConfig", "SweepAxes", "config_from_dict", "load_config"]
