"""Experiment configuration and its ``key = value`` file format."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any

from .errors import ConfigError

__all__ = ["SimConfig", "load_config", "parse_config"]

IC_METHODS = ("information_exact", "information_pathsum")


@dataclass(frozen=True)
class SimConfig:
    """Full parameterisation of one experiment.

    Rates are in bits per second, sizes in bytes and times in seconds.
    ``baseline_rate`` and every entry of ``anomaly_rates`` are aggregate
    network loads: the baseline is split evenly over ``flow_count`` flows and
    the attack load is split evenly over the currently infected nodes.
    """

    n: int = 200
    side: float = 100.0
    radio_range: float = 15.0
    sim_time: float = 900.0
    replications: int = 100
    flow_count: int = 35
    baseline_rate: float = 0.5e6
    packet_size: int = 512
    queue_cap: int = 1000
    link_rate: float = 100e6  # bits/s; high enough that the attack load never saturates a link
    prop_delay: float = 5e-6
    t_train: float = 80.0
    delta: float = 1.0
    k: float = 5.0
    central_fractions: tuple[float, ...] = (0.15, 0.20)
    anomaly_rates: tuple[float, ...] = (10e6, 50e6)
    t_seeds: int = 2
    injection_time: float = 100.0
    rng_seed: int = 1
    max_hops: int = 8
    ic_method: str = "information_exact"
    gibberish_size: int = 512

    def __post_init__(self) -> None:
        for name in ("central_fractions", "anomaly_rates"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        self.validate()

    def validate(self) -> None:
        positive = (
            "n side radio_range sim_time replications flow_count baseline_rate packet_size "
            "queue_cap link_rate t_train delta k t_seeds injection_time max_hops gibberish_size"
        ).split()
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.n < 2:
            raise ConfigError("n must be at least 2")
        if self.prop_delay < 0:
            raise ConfigError("prop_delay must be nonnegative")
        if not self.t_train < self.injection_time < self.sim_time:
            raise ConfigError(
                f"need t_train < injection_time < sim_time, got "
                f"{self.t_train} / {self.injection_time} / {self.sim_time}"
            )
        if self.t_seeds > self.n:
            raise ConfigError(f"t_seeds={self.t_seeds} exceeds n={self.n}")
        if not self.central_fractions or any(not 0 < f <= 1 for f in self.central_fractions):
            raise ConfigError(f"central_fractions must lie in (0, 1]: {self.central_fractions}")
        if not self.anomaly_rates or any(r <= self.baseline_rate for r in self.anomaly_rates):
            raise ConfigError("every anomaly rate must exceed baseline_rate")
        if self.ic_method not in IC_METHODS:
            raise ConfigError(f"ic_method must be one of {IC_METHODS}, got {self.ic_method!r}")
        if self.t_train / self.delta < 10:
            raise ConfigError("the training window must cover at least 10 intervals")

    @property
    def flow_rate(self) -> float:
        """Per-flow CBR rate of the baseline traffic."""
        return self.baseline_rate / self.flow_count

    @property
    def n_intervals(self) -> int:
        return interval_count(self.sim_time, self.delta)

    def replace(self, **changes: Any) -> SimConfig:
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = ",".join(repr(v) for v in value)
            else:
                value = repr(value) if not isinstance(value, str) else value
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"


def interval_count(sim_time: float, delta: float) -> int:
    m = int(sim_time // delta)
    return m if m * delta >= sim_time else m + 1


def _coerce(name: str, raw: str, default: Any) -> Any:
    try:
        if isinstance(default, tuple):
            return tuple(float(p) for p in raw.split(",") if p.strip())
        if isinstance(default, bool):
            return raw.lower() in ("1", "true", "yes")
        if isinstance(default, int):
            as_float = float(raw)
            if not as_float.is_integer():
                raise ValueError(f"expected an integer, got {raw!r}")
            return int(as_float)
        if isinstance(default, float):
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"{name}: {exc}") from None


def parse_config(text: str, **overrides: Any) -> SimConfig:
    """Parse flat ``key = value`` text; unknown or repeated keys are errors."""
    defaults = {f.name: f.default for f in fields(SimConfig)}
    values: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in defaults:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _coerce(key, value, defaults[key])
    values.update({k: v for k, v in overrides.items() if v is not None})
    return SimConfig(**values)


def load_config(path: str | Path, **overrides: Any) -> SimConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"), **overrides)
