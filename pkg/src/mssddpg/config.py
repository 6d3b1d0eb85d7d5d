"""Run configuration: one YAML file with a section per module."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
import yaml

from .agents.training import LEARNED_KINDS, TrainConfig, default_hyper
from .env import EnvConfig
from .errors import ConfigError, MSSDDPGError
from .features import PipelineConfig
from .market_data import BarSeries, SynthSpec, TimeScale, load_csv, synth_series
from .metrics import MetricsConfig

Bound = str | int


@dataclass(frozen=True)
class DataConfig:
    path: str | None = None
    synth: dict[str, Any] | None = None
    scale: str = "day"
    name: str = ""

    def __post_init__(self) -> None:
        if (self.path is None) == (self.synth is None):
            raise ConfigError("data needs exactly one of 'path' or 'synth'")
        TimeScale.parse(self.scale)

    def load(self, base: Path | None = None) -> BarSeries:
        if self.synth is not None:
            params = dict(self.synth.get("params", {}))
            params.setdefault("scale", self.scale)
            return synth_series(SynthSpec(self.synth["kind"], int(self.synth["length"]),
                                          int(self.synth.get("seed", 0)), params))
        path = Path(self.path)
        if base is not None and not path.is_absolute():
            path = base / path
        return load_csv(path, self.scale)

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        return Path(self.path).stem if self.path else str(self.synth.get("kind", "synthetic"))


@dataclass(frozen=True)
class SplitConfig:
    """Half-open ``[start, end)`` ranges, given as dates or as integer bar indices."""

    train: tuple[Bound, Bound]
    test: tuple[Bound, Bound]

    def __post_init__(self) -> None:
        for name in ("train", "test"):
            # YAML turns bare dates into date objects; keep bounds as int or str
            rng = tuple(x if isinstance(x, int) else str(x) for x in getattr(self, name))
            if len(rng) != 2:
                raise ConfigError(f"split.{name} must be [start, end]")
            object.__setattr__(self, name, rng)
        ints = [isinstance(x, int) for x in (*self.train, *self.test)]
        if any(ints) and not all(ints):
            raise ConfigError("split bounds must be all dates or all integer indices")
        if all(ints):
            tr, te = self.train, self.test
        else:
            try:
                tr = tuple(pd.Timestamp(str(x)) for x in self.train)
                te = tuple(pd.Timestamp(str(x)) for x in self.test)
            except ValueError as exc:
                raise ConfigError(f"bad split date: {exc}") from exc
        if not tr[0] < tr[1] or not te[0] < te[1]:
            raise ConfigError("split ranges must be non-empty")
        if tr[1] > te[0]:
            raise ConfigError("train range must precede and not overlap the test range")

    def indices(self, series: BarSeries) -> tuple[tuple[int, int], tuple[int, int]]:
        n = len(series)
        if isinstance(self.train[0], int):
            out = (self.train, self.test)
        else:
            ts = series.timestamp

            def locate(a: Bound, b: Bound) -> tuple[int, int]:
                lo = np.datetime64(pd.Timestamp(str(a)).to_datetime64(), "ns")
                hi = np.datetime64(pd.Timestamp(str(b)).to_datetime64(), "ns")
                return int(np.searchsorted(ts, lo, "left")), int(np.searchsorted(ts, hi, "left"))

            out = (locate(*self.train), locate(*self.test))
        (a, b), (c, d) = out
        if not (0 <= a < b <= c < d <= n):
            raise ConfigError(f"split {out} does not fit a series of {n} bars")
        if b - a < 3 or d - c < 2:
            raise ConfigError("train or test split has too few bars")
        return (int(a), int(b)), (int(c), int(d))


@dataclass(frozen=True)
class AgentsConfig:
    kinds: tuple[str, ...] = ("mssddpg",)
    ddpg: dict[str, Any] = field(default_factory=dict)
    dqn: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "kinds", tuple(self.kinds))
        bad = [k for k in self.kinds if k not in LEARNED_KINDS]
        if bad:
            raise ConfigError(f"unknown agent kinds {bad}; choose from {list(LEARNED_KINDS)}")
        try:
            default_hyper("ddpg", self.ddpg)
            default_hyper("dqn", self.dqn)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad agent hyperparameters: {exc}") from exc

    def hyper(self, kind: str):
        return default_hyper(kind, self.dqn if kind == "dqn" else self.ddpg)


@dataclass(frozen=True)
class RunConfig:
    data: DataConfig
    split: SplitConfig
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    env: EnvConfig = field(default_factory=EnvConfig)
    agents: AgentsConfig = field(default_factory=AgentsConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    seeds: tuple[int, ...] = (0,)
    out: str = "runs/default"

    def __post_init__(self) -> None:
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("duplicate seeds")

    def to_dict(self) -> dict[str, Any]:
        d = {
            "data": {k: v for k, v in asdict(self.data).items() if v is not None},
            "split": {"train": list(self.split.train), "test": list(self.split.test)},
            "pipeline": {"scales": [str(s) for s in self.pipeline.scales],
                         "window_length": self.pipeline.window_length,
                         "normalization": self.pipeline.normalization},
            "env": {"fee_rate": self.env.fee_rate, "initial_cash": self.env.initial_cash},
            "agents": {"kinds": list(self.agents.kinds), "ddpg": dict(self.agents.ddpg),
                       "dqn": dict(self.agents.dqn)},
            "train": asdict(self.train),
            "metrics": asdict(self.metrics),
            "seeds": list(self.seeds),
            "out": self.out,
        }
        return json.loads(json.dumps(d))  # normalise tuples to lists

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> RunConfig:
        if not isinstance(d, dict):
            raise ConfigError("config must be a mapping")
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config sections {sorted(unknown)}")
        try:
            split = d["split"]
            kw: dict[str, Any] = {
                "data": DataConfig(**d["data"]),
                "split": SplitConfig(tuple(split["train"]), tuple(split["test"])),
            }
            if "pipeline" in d:
                p = dict(d["pipeline"])
                if "scales" in p:
                    p["scales"] = tuple(TimeScale.parse(s) for s in p["scales"])
                kw["pipeline"] = PipelineConfig(**p)
            if "env" in d:
                kw["env"] = EnvConfig(**d["env"])
            if "agents" in d:
                kw["agents"] = AgentsConfig(**d["agents"])
            if "train" in d:
                kw["train"] = TrainConfig(**d["train"])
            if "metrics" in d:
                kw["metrics"] = MetricsConfig(**d["metrics"])
            if "seeds" in d:
                kw["seeds"] = tuple(d["seeds"])
            if "out" in d:
                kw["out"] = str(d["out"])
            return cls(**kw)
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError, MSSDDPGError) as exc:
            raise ConfigError(f"invalid config: {exc!r}") from exc

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    def hash(self) -> str:
        """Content hash of everything that affects results (the output directory excluded)."""
        d = self.to_dict()
        d.pop("out")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]

    def with_overrides(self, *, seeds=None, out=None, fee=None, scales=None) -> RunConfig:
        cfg = self
        if seeds:
            cfg = replace(cfg, seeds=tuple(seeds))
        if out is not None:
            cfg = replace(cfg, out=str(out))
        if fee is not None:
            try:
                cfg = replace(cfg, env=replace(cfg.env, fee_rate=float(fee)))
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        if scales is not None:
            cfg = replace(cfg, pipeline=replace(cfg.pipeline, scales=tuple(scales)))
        return cfg


def parse_config(text: str) -> RunConfig:
    try:
        d = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    return RunConfig.from_dict(d)


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)
