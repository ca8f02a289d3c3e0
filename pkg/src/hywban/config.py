"""TOML configuration with strict key checking.

Every section is optional; omitted keys keep their defaults. Example::

    master_seed = 42

    [dataset]
    size = 2040
    train_fraction = 0.8

    [thresholds]
    snr_db = 19.0

    [stats.snr_db]
    mean = 23.6
    std_dev = 4.23
    min = 17.57
    max = 33.32

    [train]              # autoencoder
    epochs = 50

    [train_classifier]
    batch_size = 32

    [channel]
    jam_power_ratio = 4.0
    mode = "Hybrid"

    [campaign]
    n_sessions = 10000
    width = 16

    [energy]
    e_bit_uj = 0.1

    [paths]
    out_dir = "out"

The file path comes from ``--config`` or the ``HYWBAN_CONFIG`` environment variable.
"""
from __future__ import annotations

import dataclasses
import os
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .energy import EnergyParams
from .features import FEATURE_NAMES, Thresholds, ValidationError
from .neural import CLASSIFIER_CONFIG, TrainConfig
from .phychannel import ChannelParams, Mode
from .synthgen import DEFAULT_STATS, FeatureStats

ENV_VAR = "HYWBAN_CONFIG"


class ConfigError(ValidationError):
    pass


@dataclass(frozen=True)
class DatasetConfig:
    size: int = 2040
    train_fraction: float = 0.8
    augment_std_scale: float = 1.0


@dataclass(frozen=True)
class CampaignSettings:
    n_sessions: int = 10_000
    width: int = 16


@dataclass(frozen=True)
class Paths:
    out_dir: str = "out"


@dataclass(frozen=True)
class Config:
    master_seed: int = 42
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    thresholds: Thresholds = field(default_factory=Thresholds)
    stats: dict = field(default_factory=lambda: dict(DEFAULT_STATS))
    train: TrainConfig = field(default_factory=TrainConfig)
    train_classifier: TrainConfig = field(default_factory=lambda: replace(CLASSIFIER_CONFIG))
    channel: ChannelParams = field(default_factory=ChannelParams)
    campaign: CampaignSettings = field(default_factory=CampaignSettings)
    energy: EnergyParams = field(default_factory=EnergyParams)
    paths: Paths = field(default_factory=Paths)


_SECTIONS = {
    "dataset": DatasetConfig, "thresholds": Thresholds, "train": TrainConfig,
    "train_classifier": TrainConfig, "channel": ChannelParams, "campaign": CampaignSettings,
    "energy": EnergyParams, "paths": Paths,
}


def _build(cls, base, values: dict, where: str):
    if not isinstance(values, dict):
        raise ConfigError(f"[{where}] must be a table")
    known = {f.name for f in fields(cls)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown key(s) in [{where}]: {', '.join(sorted(unknown))}")
    if cls is ChannelParams and "mode" in values:
        values = dict(values, mode=Mode(values["mode"]))
    try:
        return replace(base, **values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{where}]: {exc}") from exc


def from_dict(data: dict) -> Config:
    data = dict(data)
    cfg = Config()
    updates = {}
    if "master_seed" in data:
        seed = data.pop("master_seed")
        if not isinstance(seed, int) or seed < 0:
            raise ConfigError("master_seed must be a non-negative integer")
        updates["master_seed"] = seed
    if "stats" in data:
        table = data.pop("stats")
        stats = dict(cfg.stats)
        for name, values in table.items():
            if name not in FEATURE_NAMES:
                raise ConfigError(f"unknown feature in [stats]: {name}")
            stats[name] = _build(FeatureStats, stats[name], values, f"stats.{name}")
        updates["stats"] = stats
    for key, values in data.items():
        if key not in _SECTIONS:
            raise ConfigError(f"unknown config section or key: {key}")
        updates[key] = _build(_SECTIONS[key], getattr(cfg, key), values, key)
    return replace(cfg, **updates)


def load_config(path: str | os.PathLike | None = None) -> Config:
    """Load ``path`` (or ``$HYWBAN_CONFIG``); with neither, return defaults."""
    path = path or os.environ.get(ENV_VAR)
    if not path:
        return Config()
    try:
        with open(Path(path), "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return from_dict(data)


def to_dict(cfg: Config) -> dict:
    out = dataclasses.asdict(cfg)
    out["channel"]["mode"] = cfg.channel.mode.value
    return out
