"""Experiment configuration: dataclasses, YAML parsing and emission.

Config files are YAML mappings with optional nested sections. Every key has a
default, so an empty file is a valid config. Unknown keys are rejected, and so
is any value that breaks a section's invariants. Any key can be overridden
from the environment as ``LIPIRING_<SECTION>__<KEY>``, e.g.
``LIPIRING_COEV__TOURNAMENT_SIZE=3`` or ``LIPIRING_SEED=4``.
"""

from __future__ import annotations

import copy
import enum
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .coevolution import CoevParams
from .data import DataSpec, GaussianMixture, IdxFile, data_dim, ring_of_gaussians
from .gan import LossConfig
from .nn import Activation, LayerSpec, mlp_specs
from .topology import Grid, Ring, Topology

ENV_PREFIX = "LIPIRING_"


class ConfigError(ValueError):
    pass


class ExecutionMode(str, enum.Enum):
    SEQUENTIAL = "sequential"
    ASYNC = "async"


@dataclass(frozen=True)
class StopCondition:
    """Either a fixed number of generations or a wall-clock budget in seconds."""

    kind: str = "epochs"
    seconds: float | None = None

    def __post_init__(self):
        if self.kind not in ("epochs", "wall_clock"):
            raise ValueError(f"stop kind must be 'epochs' or 'wall_clock', got {self.kind!r}")
        if self.kind == "wall_clock" and not (self.seconds and self.seconds > 0):
            raise ValueError("wall_clock stop needs seconds > 0")


@dataclass(frozen=True)
class NetworkConfig:
    latent_dim: int = 8
    generator_hidden: tuple[int, ...] = (32, 32)
    discriminator_hidden: tuple[int, ...] = (32, 32)
    activation: Activation = Activation.TANH
    # tanh output cannot reach points outside [-1, 1]; synthetic targets use identity
    generator_output: Activation = Activation.IDENTITY

    def __post_init__(self):
        object.__setattr__(self, "generator_hidden", tuple(int(h) for h in self.generator_hidden))
        object.__setattr__(self, "discriminator_hidden", tuple(int(h) for h in self.discriminator_hidden))
        object.__setattr__(self, "activation", Activation(self.activation))
        object.__setattr__(self, "generator_output", Activation(self.generator_output))
        if self.latent_dim < 1:
            raise ValueError("latent_dim must be >= 1")
        if any(h < 1 for h in self.generator_hidden + self.discriminator_hidden):
            raise ValueError("hidden widths must be >= 1")

    def generator_specs(self, out_dim: int) -> tuple[LayerSpec, ...]:
        return mlp_specs([self.latent_dim, *self.generator_hidden, out_dim], self.activation, self.generator_output)

    def discriminator_specs(self, in_dim: int) -> tuple[LayerSpec, ...]:
        return mlp_specs([in_dim, *self.discriminator_hidden, 1], self.activation, Activation.SIGMOID)


@dataclass(frozen=True)
class OptimizerConfig:
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1 and self.epsilon > 0):
            raise ValueError("Adam needs betas in (0, 1) and epsilon > 0")


@dataclass(frozen=True)
class MixtureConfig:
    iterations: int = 200
    step_sigma: float = 0.05
    samples: int = 1000

    def __post_init__(self):
        if self.iterations < 0 or self.step_sigma <= 0 or self.samples < 2:
            raise ValueError("mixture needs iterations >= 0, step_sigma > 0, samples >= 2")


@dataclass(frozen=True)
class MetricsConfig:
    samples: int = 1000
    # high-quality radius around a mode; 3 sigma of the default mixture
    threshold: float = 0.15

    def __post_init__(self):
        if self.samples < 2 or self.threshold <= 0:
            raise ValueError("metrics need samples >= 2 and threshold > 0")


@dataclass(frozen=True)
class ExperimentConfig:
    topology: Topology = field(default_factory=lambda: Ring(6, 1))
    generations: int = 200
    coev: CoevParams = field(default_factory=CoevParams)
    loss: LossConfig = field(default_factory=LossConfig)
    data: DataSpec = field(default_factory=lambda: DataSpec(ring_of_gaussians()))
    network: NetworkConfig = field(default_factory=NetworkConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    learning_rate: float = 0.0002
    mixture: MixtureConfig = field(default_factory=MixtureConfig)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    seed: int = 0
    execution_mode: ExecutionMode = ExecutionMode.SEQUENTIAL
    stop: StopCondition = field(default_factory=StopCondition)

    def __post_init__(self):
        object.__setattr__(self, "execution_mode", ExecutionMode(self.execution_mode))
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")

    @property
    def population_size(self) -> int:
        return self.topology.size

    @property
    def data_dim(self) -> int:
        return data_dim(self.data)

    def generator_specs(self):
        return self.network.generator_specs(self.data_dim)

    def discriminator_specs(self):
        return self.network.discriminator_specs(self.data_dim)

    def replace(self, **changes) -> "ExperimentConfig":
        """Copy with some keys changed; ``topology`` and ``data`` are replaced whole."""
        base = to_dict(self)
        for section in ("topology", "data"):
            if section in changes:
                base.pop(section)
        return from_dict(_deep_merge(base, changes))


# --- dict <-> dataclass -------------------------------------------------------

_SECTIONS = {
    "coev": ("tournament_size", "mutation_probability", "mutation_scale", "disc_skip"),
    "loss": ("measuring_function", "clamp_epsilon", "generator_objective"),
    "network": ("latent_dim", "generator_hidden", "discriminator_hidden", "activation", "generator_output"),
    "optimizer": ("beta1", "beta2", "epsilon"),
    "mixture": ("iterations", "step_sigma", "samples"),
    "metrics": ("samples", "threshold"),
    "stop": ("kind", "seconds"),
}
_TOPOLOGY_KEYS = {"ring": ("kind", "size", "radius"), "grid": ("kind", "rows", "cols")}
_DATA_KEYS = {
    "gaussian_mixture": ("kind", "modes", "radius", "sigma", "centers", "batch_size", "dataset_size"),
    "idx": ("kind", "path", "batch_size", "dataset_size"),
}
_TOP_LEVEL = ("topology", "generations", "coev", "loss", "data", "network", "optimizer", "learning_rate",
              "mixture", "metrics", "seed", "execution_mode", "stop")


def _plain(value):
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, tuple):
        return [_plain(v) for v in value]
    return value


def to_dict(cfg: ExperimentConfig) -> dict[str, Any]:
    t = cfg.topology
    topo = ({"kind": "ring", "size": t.size, "radius": t.radius} if isinstance(t, Ring)
            else {"kind": "grid", "rows": t.rows, "cols": t.cols})
    src = cfg.data.source
    if isinstance(src, GaussianMixture):
        data = {"kind": "gaussian_mixture", "centers": [list(c) for c in src.centers], "sigma": src.sigma}
    else:
        data = {"kind": "idx", "path": src.path}
    data.update(batch_size=cfg.data.batch_size, dataset_size=cfg.data.dataset_size)
    out: dict[str, Any] = {"topology": topo, "data": data}
    for name in _TOP_LEVEL:
        if name in out:
            continue
        value = getattr(cfg, name)
        if name in _SECTIONS:
            out[name] = {k: _plain(getattr(value, k)) for k in _SECTIONS[name]}
        else:
            out[name] = _plain(value)
    return out


def _check_keys(section: dict, allowed, where: str, lines: dict) -> None:
    for key in section:
        if key not in allowed:
            path = f"{where}.{key}" if where else key
            line = lines.get(path)
            at = f" (line {line})" if line else ""
            raise ConfigError(f"unknown config key {path!r}{at}")


def from_dict(raw: dict[str, Any] | None, lines: dict | None = None) -> ExperimentConfig:
    raw = raw or {}
    lines = lines or {}
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    _check_keys(raw, _TOP_LEVEL, "", lines)
    kwargs: dict[str, Any] = {}
    section = ""
    try:
        for section in _SECTIONS:
            if section in raw:
                sub = raw[section] or {}
                _check_keys(sub, _SECTIONS[section], section, lines)
                kwargs[section] = {
                    "coev": CoevParams, "loss": LossConfig, "network": NetworkConfig, "optimizer": OptimizerConfig,
                    "mixture": MixtureConfig, "metrics": MetricsConfig, "stop": StopCondition,
                }[section](**sub)
        section = "topology"
        if "topology" in raw:
            kwargs["topology"] = _topology(raw["topology"] or {}, lines)
        section = "data"
        if "data" in raw:
            kwargs["data"] = _data(raw["data"] or {}, lines)
        section = ""
        for key in ("generations", "learning_rate", "seed", "execution_mode"):
            if key in raw:
                kwargs[key] = raw[key]
        return ExperimentConfig(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        where = f" in section {section!r}" if section else ""
        raise ConfigError(f"invalid config{where}: {exc}") from exc


def _topology(raw: dict, lines: dict) -> Topology:
    kind = raw.get("kind", "ring")
    if kind not in _TOPOLOGY_KEYS:
        raise ConfigError(f"topology.kind must be 'ring' or 'grid', got {kind!r}")
    _check_keys(raw, _TOPOLOGY_KEYS[kind], "topology", lines)
    if kind == "ring":
        return Ring(int(raw.get("size", 6)), int(raw.get("radius", 1)))
    return Grid(int(raw.get("rows", 3)), int(raw.get("cols", 3)))


def _data(raw: dict, lines: dict) -> DataSpec:
    kind = raw.get("kind", "gaussian_mixture")
    if kind not in _DATA_KEYS:
        raise ConfigError(f"data.kind must be 'gaussian_mixture' or 'idx', got {kind!r}")
    _check_keys(raw, _DATA_KEYS[kind], "data", lines)
    sizes = {k: int(raw[k]) for k in ("batch_size", "dataset_size") if k in raw}
    if kind == "idx":
        if "path" not in raw:
            raise ConfigError("data.kind 'idx' needs a path")
        return DataSpec(IdxFile(str(raw["path"])), **sizes)
    sigma = float(raw.get("sigma", 0.05))
    if "centers" in raw:
        if "modes" in raw or "radius" in raw:
            raise ConfigError("give either data.centers or data.modes/radius, not both")
        source = GaussianMixture(tuple(tuple(c) for c in raw["centers"]), sigma)
    else:
        source = ring_of_gaussians(int(raw.get("modes", 8)), float(raw.get("radius", 1.0)), sigma)
    return DataSpec(source, **sizes)


# --- files and environment ----------------------------------------------------

def _key_lines(node, prefix: str = "", out: dict | None = None) -> dict[str, int]:
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for key_node, value_node in node.value:
            path = f"{prefix}.{key_node.value}" if prefix else str(key_node.value)
            out[path] = key_node.start_mark.line + 1
            _key_lines(value_node, path, out)
    return out


def _deep_merge(base: dict, changes: dict) -> dict:
    merged = copy.deepcopy(base)
    for key, value in changes.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def env_overrides(environ=None) -> dict[str, Any]:
    environ = os.environ if environ is None else environ
    out: dict[str, Any] = {}
    for name, text in environ.items():
        if not name.startswith(ENV_PREFIX):
            continue
        path = name[len(ENV_PREFIX):].lower().split("__")
        node = out
        for part in path[:-1]:
            node = node.setdefault(part, {})
        node[path[-1]] = yaml.safe_load(text)
    return out


def parse_config_text(text: str, environ=None) -> ExperimentConfig:
    try:
        root = yaml.compose(text)
        raw = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
        raise ConfigError(f"config parse error at {where}: {exc.problem}") from exc
    if raw is not None and not isinstance(raw, dict):
        raise ConfigError("config must be a mapping at the top level")
    lines = _key_lines(root) if root is not None else {}
    overrides = env_overrides(environ)
    if overrides:
        file_raw = raw or {}
        raw = _deep_merge(file_raw, overrides)
        # a topology/data kind switch invalidates the file's other keys in that section
        for section in ("topology", "data"):
            kind = overrides.get(section, {}).get("kind")
            if kind and (file_raw.get(section) or {}).get("kind") != kind:
                raw[section] = copy.deepcopy(overrides[section])
    return from_dict(raw, lines)


def parse_config(path, environ=None) -> ExperimentConfig:
    return parse_config_text(Path(path).read_text(), environ)


def dump_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(to_dict(cfg), sort_keys=False)
