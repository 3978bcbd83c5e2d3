"""Run configuration: one JSON document for DSP, model, training and paths."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace

from .dsp import DspConfig
from .model.config import DiscriminatorConfig, GeneratorConfig
from .train import TrainConfig

__all__ = ["Config", "ConfigError", "load_config"]


class ConfigError(ValueError):
    pass


def _tuplify(v):
    return tuple(_tuplify(x) for x in v) if isinstance(v, list) else v


def _listify(v):
    return [_listify(x) for x in v] if isinstance(v, tuple) else v


def _section(cls, data, where):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object, got {type(data).__name__}")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {unknown}; allowed: {sorted(known)}")
    try:
        return cls(**{k: _tuplify(v) for k, v in data.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


@dataclass(frozen=True)
class Config:
    dsp: DspConfig = field(default_factory=DspConfig)
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    discriminator: DiscriminatorConfig = field(default_factory=DiscriminatorConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    inventory: str = "inventory.txt"
    cache_dir: str = "cache"
    seed: int = 0
    griffin_lim_iters: int = 60

    # unannotated, so not a dataclass field
    _SECTIONS = {
        "dsp": DspConfig,
        "generator": GeneratorConfig,
        "discriminator": DiscriminatorConfig,
        "train": TrainConfig,
    }

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        top = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - top)
        if unknown:
            raise ConfigError(f"unknown top-level key(s) {unknown}; allowed: {sorted(top)}")
        kw = {name: _section(sc, data.get(name), name) for name, sc in cls._SECTIONS.items()}
        for key, typ in (("inventory", str), ("cache_dir", str), ("seed", int), ("griffin_lim_iters", int)):
            if key in data:
                v = data[key]
                if not isinstance(v, typ) or isinstance(v, bool):
                    raise ConfigError(f"{key}: expected {typ.__name__}, got {v!r}")
                kw[key] = v
        if kw.get("griffin_lim_iters", 1) < 1:
            raise ConfigError("griffin_lim_iters must be >= 1")
        return cls(**kw)

    def to_dict(self):
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = {k: _listify(x) for k, x in asdict(v).items()} if f.name in self._SECTIONS else v
        return out

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def loads(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        return cls.from_dict(data)

    def with_seed(self, seed):
        return replace(self, seed=seed, train=replace(self.train, seed=seed))


def load_config(path=None):
    if path is None:
        return Config()
    try:
        with open(path, encoding="utf-8") as f:
            return Config.loads(f.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
