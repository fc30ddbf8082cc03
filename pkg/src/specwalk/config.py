"""Flat ``key = value`` run configuration shared by the CLI and the estimators."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields

from .embedding import TrainConfig
from .walks import WalkConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    dataset: str = ""
    output_dir: str = "out"
    hops: int = 2
    cap: int = 30
    k: int = 5
    ot_order: float = 2.0
    epsilon: float = 0.6
    walk_length: int = 100
    walks_per_node: int = 50
    dim: int = 128
    window: int = 10
    gamma: float = 1e-7
    epochs: int = 100
    learning_rate: float = 0.025
    negatives: int = 5
    full_softmax: bool = False
    test_fraction: float = 0.1
    walks_on_train_graph: bool = True
    labels: str = ""
    node_split: str = ""
    per_class: int = 20
    runs: int = 10
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        checks = [
            (self.hops >= 1, "hops must be >= 1"),
            (self.cap >= 1, "cap must be >= 1"),
            (self.k >= 1, "k must be >= 1"),
            (self.ot_order >= 1, "ot_order must be >= 1"),
            (0.0 <= self.epsilon <= 1.0, "epsilon must lie in [0, 1]"),
            (self.walk_length >= 2, "walk_length must be >= 2"),
            (self.walks_per_node >= 1, "walks_per_node must be >= 1"),
            (self.dim >= 1, "dim must be >= 1"),
            (self.window >= 1, "window must be >= 1"),
            (self.gamma >= 0, "gamma must be >= 0"),
            (self.epochs >= 1, "epochs must be >= 1"),
            (self.learning_rate > 0, "learning_rate must be > 0"),
            (self.negatives >= 0, "negatives must be >= 0"),
            (0.0 < self.test_fraction < 1.0, "test_fraction must lie in (0, 1)"),
            (self.per_class >= 1, "per_class must be >= 1"),
            (self.runs >= 1, "runs must be >= 1"),
            (self.threads >= 1, "threads must be >= 1"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)

    def replace(self, **overrides) -> "RunConfig":
        unknown = set(overrides) - {f.name for f in fields(self)}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return dataclasses.replace(self, **overrides)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    def walk_config(self, seed: int | None = None) -> WalkConfig:
        return WalkConfig(walk_length=self.walk_length, walks_per_node=self.walks_per_node,
                          epsilon=self.epsilon, k=self.k,
                          seed=self.seed if seed is None else seed)

    def train_config(self, task: str = "link-prediction", seed: int | None = None) -> TrainConfig:
        return TrainConfig(dim=self.dim, window=self.window, gamma=self.gamma,
                           epochs=self.epochs, learning_rate=self.learning_rate,
                           negatives=self.negatives, task=task,
                           full_softmax=self.full_softmax,
                           seed=self.seed if seed is None else seed)


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def coerce(key: str, raw: str):
    if key not in _TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    kind = _TYPES[key]
    try:
        if kind == "bool":
            low = raw.strip().lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw.strip()
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None


def parse_config(text: str) -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        out[key] = coerce(key, value)
    return out


def load_config(path=None, **overrides) -> RunConfig:
    """Read a config file (optional) and apply ``overrides`` on top."""
    values = {}
    if path:
        with open(path, "r", encoding="utf-8") as fh:
            values = parse_config(fh.read())
    values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig().replace(**values)


def format_config(cfg: RunConfig) -> str:
    return "".join(f"{k} = {v}\n" for k, v in cfg.as_dict().items())
