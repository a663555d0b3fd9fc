"""Run configuration: nested dataclasses loaded from JSON, unknown keys rejected."""

from __future__ import annotations

import dataclasses
import json
import os
import typing
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..agents import BdqnConfig, SpgConfig
from ..dbsim import CostModel

AGENTS = ("bdqn", "spg", "default", "full", "search")
OUT_ENV = "INDEXRL_OUT"


class ConfigError(ValueError):
    pass


@dataclass
class WorkloadConfig:
    train_count: int = 100
    test_count: int = 3
    length: int = 25
    n_max: int = 3
    p_eq: float = 0.7
    seed: int = 0
    test_seed: int = 2024


@dataclass
class RewardConfig:
    w_size: float = 0.5
    w_latency: float = 0.5


@dataclass
class EncoderConfig:
    flat_len: int = 32
    row_tokens: int = 8
    max_keys: int = 3


@dataclass
class SearchConfig:
    budget: int = 500
    subsample: float = 0.5
    window: int = 20
    explore_c: float = 0.5
    latency_scope: str = "workload"


@dataclass
class RunConfig:
    agent: str = "spg"
    seed: int = 0
    schema_path: str | None = None
    out_dir: str = "runs"
    curve_window: int = 10
    workload: WorkloadConfig = field(default_factory=WorkloadConfig)
    cost: CostModel = field(default_factory=CostModel)
    reward: RewardConfig = field(default_factory=RewardConfig)
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    bdqn: BdqnConfig = field(default_factory=BdqnConfig)
    spg: SpgConfig = field(default_factory=SpgConfig)
    search: SearchConfig = field(default_factory=SearchConfig)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.agent not in AGENTS:
            raise ConfigError(f"agent must be one of {AGENTS}, got {self.agent!r}")
        w = self.workload
        for name in ("train_count", "test_count", "length", "n_max"):
            if getattr(w, name) < 1:
                raise ConfigError(f"workload.{name} must be >= 1")
        if not 0.0 <= w.p_eq <= 1.0:
            raise ConfigError("workload.p_eq must lie in [0, 1]")
        if self.encoder.max_keys < 1:
            raise ConfigError("encoder.max_keys must be >= 1")
        if self.search.budget < 1:
            raise ConfigError("search.budget must be >= 1")
        if not 0.0 < self.search.subsample <= 1.0:
            raise ConfigError("search.subsample must lie in (0, 1]")
        if self.search.latency_scope not in ("workload", "total"):
            raise ConfigError("search.latency_scope must be 'workload' or 'total'")
        if self.reward.w_size < 0 or self.reward.w_latency < 0:
            raise ConfigError("reward weights must be nonnegative")

    @property
    def total_steps(self) -> int:
        return self.workload.train_count * self.workload.length

    def train_seed(self) -> int:
        """Training workloads depend on the workload seed and the run seed."""
        ss = np.random.SeedSequence([self.workload.seed, self.seed])
        return int(ss.generate_state(1)[0])

    def output_root(self) -> Path:
        return Path(os.environ.get(OUT_ENV) or self.out_dir)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, **kw)


def _build(cls, data, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected an object")
    hints = typing.get_type_hints(cls)
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"{path or 'config'}: unknown keys {unknown}")
    kw = {}
    for k, v in data.items():
        t = hints[k]
        if dataclasses.is_dataclass(t):
            kw[k] = _build(t, v, f"{path}.{k}" if path else k)
        else:
            kw[k] = v
    try:
        return cls(**kw)
    except TypeError as e:
        raise ConfigError(f"{path or 'config'}: {e}") from e


def config_from_dict(data: dict) -> RunConfig:
    return _build(RunConfig, data, "")


def load_config(path: str | Path | None = None, **overrides) -> RunConfig:
    data = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON ({e})") from e
    data.update({k: v for k, v in overrides.items() if v is not None})
    return config_from_dict(data)
