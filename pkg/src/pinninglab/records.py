"""Experiment configuration and run-record plumbing.

Configs are flat JSON objects with a mandatory seed (no wall-clock
defaults).  A run record is a single JSON document; tabular outputs go
to CSV files with `#`-prefixed provenance headers, and identical
(config, seed) pairs produce byte-identical CSV.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

VERSION = "0.1.0"


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int
    params: dict

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if "experiment" not in raw:
            raise ConfigError("config must name an experiment")
        if "seed" not in raw:
            raise ConfigError("config must carry an explicit seed")
        params = {k: v for k, v in raw.items() if k not in ("experiment", "seed")}
        return cls(experiment=str(raw["experiment"]), seed=int(raw["seed"]), params=params)

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def get(self, key: str, default=None):
        return self.params.get(key, default)

    def to_dict(self) -> dict:
        return {"experiment": self.experiment, "seed": self.seed, **self.params}

    @property
    def sha256(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def estimate(value: float, std_error: float | None = None) -> dict:
    if std_error is None:
        return {"value": float(value), "exact": True}
    return {"value": float(value), "std_error": float(std_error)}


@dataclass
class RunRecord:
    experiment: str
    seed: int
    config: dict
    config_sha256: str
    version: str = VERSION
    estimates: dict = field(default_factory=dict)
    baselines: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)
    wall_time_s: float = 0.0

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.__dict__, indent=indent, sort_keys=True, default=_jsonable)

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n")


def _jsonable(obj):
    try:
        import numpy as np
        if isinstance(obj, (np.integer,)):
            return int(obj)
        if isinstance(obj, (np.floating,)):
            return float(obj)
        if isinstance(obj, np.ndarray):
            return obj.tolist()
    except ImportError:
        pass
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    return str(obj)


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path: str | Path, header: list[str], rows, meta: dict) -> None:
    lines = [f"# {k}={v}" for k, v in meta.items()]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def csv_meta(cfg: ExperimentConfig) -> dict:
    return {"version": VERSION, "seed": cfg.seed, "config_sha256": cfg.sha256}
