"""Run configuration shared by the command line and the pipeline."""
from __future__ import annotations

import json
import zlib
from dataclasses import asdict, dataclass, field, fields, is_dataclass, replace
from pathlib import Path

import numpy as np

TOOL_NAME = "sailtour"
TOOL_VERSION = "0.1.0"


class ConfigError(ValueError):
    pass


def stage_seed(master: int, stage: str) -> int:
    """Derive the seed of one pipeline stage from the master seed."""
    ss = np.random.SeedSequence(entropy=int(master), spawn_key=(zlib.crc32(stage.encode()),))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


@dataclass
class DataSection:
    count: int = 2000
    beta: float = 0.1265
    epoch_mjd: float = 57800.0
    best_of: int = 10
    max_guesses: int = 100
    tof_min_days: float = 50.0
    tof_max_days: float = 1500.0
    split_ratio: float = 0.9


@dataclass
class NetSection:
    hidden: list = field(default_factory=lambda: [60, 60, 60])
    activation: str = "sigmoid"
    feature_kind: str = "COE"
    batch_size: int = 200
    epochs: int = 5000
    initial_lr: float = 0.01
    decay: float = 0.98


@dataclass
class SearchSection:
    catalog_size: int = 100
    start_mjd: float = 64329.0
    horizon_days: float = 3650.0
    cp: float = 0.5  # sequence planning
    select_cp: float = 1e-4  # target selection favours depth-first search
    sims_per_layer: int = 1000
    restarts: int = 4
    start_depth: int = 5
    max_depth: int = 15
    stay_days: float = 10.0
    dt_max_days: float | None = None  # reward scale for search and tune-cp; None means depth x 365


@dataclass
class VerifySection:
    best_of: int = 10
    max_guesses: int = 100
    margin_days: float = 150.0
    free_t0: bool = False


@dataclass
class RunConfig:
    seed: int = 0
    jobs: int = 1
    out_dir: str = "run"
    data: DataSection = field(default_factory=DataSection)
    net: NetSection = field(default_factory=NetSection)
    search: SearchSection = field(default_factory=SearchSection)
    verify: VerifySection = field(default_factory=VerifySection)

    def to_dict(self) -> dict:
        return asdict(self)

    def seed_for(self, stage: str) -> int:
        return stage_seed(self.seed, stage)


PRESETS = {
    # tuned on the 2000-pair corpus: MOE generalizes best, and more steps per epoch are needed
    "desk": {"net": {"feature_kind": "MOE", "batch_size": 100, "initial_lr": 0.03}},
    "paper": {
        "data": {"count": 40000},
        "net": {"hidden": [120] * 5, "epochs": 30000},
        "search": {"catalog_size": 1000, "sims_per_layer": 2000, "restarts": 200, "max_depth": 20},
        "verify": {"max_guesses": 1000},
    },
}


def _merge(obj, values: dict, path: str = ""):
    if not isinstance(values, dict):
        raise ConfigError(f"{path or 'config'}: expected an object")
    known = {f.name: f for f in fields(obj)}
    for key, val in values.items():
        where = f"{path}.{key}" if path else key
        if key not in known:
            raise ConfigError(f"unknown config key {where!r}; valid keys: {sorted(known)}")
        cur = getattr(obj, key)
        if is_dataclass(cur):
            _merge(cur, val, where)
            continue
        if isinstance(cur, bool):
            if not isinstance(val, bool):
                raise ConfigError(f"{where}: expected true/false, got {val!r}")
        elif isinstance(cur, int):
            if isinstance(val, bool) or not isinstance(val, int):
                raise ConfigError(f"{where}: expected an integer, got {val!r}")
        elif isinstance(cur, float):
            if isinstance(val, bool) or not isinstance(val, (int, float)):
                raise ConfigError(f"{where}: expected a number, got {val!r}")
            val = float(val)
        elif isinstance(cur, list):
            if not isinstance(val, list):
                raise ConfigError(f"{where}: expected a list, got {val!r}")
        elif isinstance(cur, str):
            if not isinstance(val, str):
                raise ConfigError(f"{where}: expected a string, got {val!r}")
        setattr(obj, key, val)
    return obj


def build_config(preset: str = "desk", file=None, overrides: dict | None = None) -> RunConfig:
    """Preset, then the JSON file, then explicit overrides."""
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    cfg = _merge(RunConfig(), PRESETS[preset])
    if file is not None:
        try:
            values = json.loads(Path(file).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file {file} does not exist") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {file} is not valid JSON: {exc}") from exc
        _merge(cfg, values)
    if overrides:
        _merge(cfg, overrides)
    validate(cfg)
    return cfg


def config_from_dict(values: dict) -> RunConfig:
    cfg = _merge(RunConfig(), values)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    d, n, s = cfg.data, cfg.net, cfg.search
    checks = [
        (d.count >= 1, "data.count must be >= 1"),
        (0.0 <= d.beta < 1.0, "data.beta must lie in [0, 1)"),
        (0.0 < d.split_ratio < 1.0, "data.split_ratio must lie in (0, 1)"),
        (0.0 < d.tof_min_days < d.tof_max_days, "data.tof_min_days < data.tof_max_days required"),
        (all(isinstance(h, int) and h >= 1 for h in n.hidden), "net.hidden must be positive integers"),
        (n.activation in ("sigmoid", "tanh", "relu"), "net.activation must be sigmoid, tanh or relu"),
        (n.feature_kind in ("COE", "RV", "MOE"), "net.feature_kind must be COE, RV or MOE"),
        (n.batch_size >= 1 and n.epochs >= 0, "net.batch_size >= 1 and net.epochs >= 0 required"),
        (n.initial_lr > 0.0 and 0.0 < n.decay <= 1.0, "net.initial_lr > 0 and 0 < net.decay <= 1 required"),
        (s.horizon_days > 0.0, "search.horizon_days must be positive"),
        (1 <= s.start_depth <= s.max_depth, "1 <= search.start_depth <= search.max_depth required"),
        (s.cp >= 0.0 and s.select_cp >= 0.0, "search.cp and search.select_cp must be >= 0"),
        (s.catalog_size >= s.start_depth, "search.catalog_size must be >= search.start_depth"),
        (s.sims_per_layer >= 1 and s.restarts >= 1, "search.sims_per_layer and search.restarts must be >= 1"),
        (s.dt_max_days is None or (isinstance(s.dt_max_days, (int, float)) and s.dt_max_days > 0),
         "search.dt_max_days must be null or a positive number"),
        (cfg.jobs >= 1, "jobs must be >= 1"),
    ]
    for ok, msg in checks:
        if not ok:
            raise ConfigError(msg)


def artifact_stamp(cfg: RunConfig, stage: str) -> dict:
    """Provenance block embedded in every written artifact."""
    return {"tool": TOOL_NAME, "version": TOOL_VERSION, "stage": stage, "config": cfg.to_dict()}


__all__ = ["RunConfig", "DataSection", "NetSection", "SearchSection", "VerifySection", "PRESETS",
           "ConfigError", "build_config", "config_from_dict", "stage_seed", "artifact_stamp", "replace"]
