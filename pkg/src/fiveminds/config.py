"""Strict YAML run configuration for the command-line pipeline.

Each subcommand has its own config block schema.  Parsing is strict:
unknown keys raise ConfigError before any output file is touched, so a
typo can never silently fall back to a default.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import yaml

from .corpus import CORPUS_OBJECTS, TEST_SIZE, TRAIN_SIZE, spec_from_dict
from .errors import ConfigError
from .worldsim import ScenarioSpec


def _require_keys(d: dict, known: set[str], where: str) -> None:
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be a mapping")
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


@dataclass(frozen=True)
class CorpusBlock:
    n_train: int = TRAIN_SIZE
    n_test: int = TEST_SIZE
    n_objects: int = CORPUS_OBJECTS
    seed: int = 0


@dataclass(frozen=True)
class SimulateConfig:
    out: Path
    seed: int = 0
    corpus: CorpusBlock | None = None
    scenarios: tuple[ScenarioSpec, ...] = ()


@dataclass(frozen=True)
class TrainConfig:
    data: Path
    out: Path
    seed: int = 0
    grid: tuple[float, ...] = (0.0, 0.1, 0.5, 1.0, 2.0, 5.0)
    max_theta1: int = 500
    window: int = 10
    tau: float | None = None
    beam_n: int = 5
    beam_m: int = 3
    marg_every: bool = True
    l2: float = 1e-3
    belief_l2: float = 1e-5


@dataclass(frozen=True)
class ParseConfig:
    model: Path
    data: Path
    out: Path
    seed: int = 0
    traces: tuple[str, ...] = ()    # empty means every trace in data
    dump_features: bool = False


@dataclass(frozen=True)
class EvalConfig:
    data: Path
    parses: Path
    out: Path
    seed: int = 0
    chance_seed: int = 0


@dataclass(frozen=True)
class KeyframesConfig:
    model: Path
    data: Path
    out: Path
    seed: int = 0
    traces: tuple[str, ...] = ()
    k: int = 10
    window: int = 15
    source: str = "marginal"


def _load_yaml(path: str | Path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} must be a mapping")
    return doc


def _path(d: dict, key: str, where: str) -> Path:
    if key not in d:
        raise ConfigError(f"{where} requires {key!r}")
    return Path(str(d[key]))


def _int(d: dict, key: str, default: int) -> int:
    v = d.get(key, default)
    if not isinstance(v, int) or isinstance(v, bool):
        raise ConfigError(f"{key!r} must be an integer")
    return v


def _bool(d: dict, key: str, default: bool) -> bool:
    v = d.get(key, default)
    if not isinstance(v, bool):
        raise ConfigError(f"{key!r} must be a boolean")
    return v


def load_simulate_config(path: str | Path) -> SimulateConfig:
    d = _load_yaml(path)
    _require_keys(d, {"out", "seed", "corpus", "scenarios"}, "simulate config")
    corpus = None
    if "corpus" in d:
        cb = d["corpus"]
        _require_keys(cb, {"n_train", "n_test", "n_objects", "seed"},
                      "corpus block")
        corpus = CorpusBlock(n_train=_int(cb, "n_train", TRAIN_SIZE),
                             n_test=_int(cb, "n_test", TEST_SIZE),
                             n_objects=_int(cb, "n_objects", CORPUS_OBJECTS),
                             seed=_int(cb, "seed", 0))
    scenarios = tuple(spec_from_dict(s) for s in d.get("scenarios", []))
    if corpus is None and not scenarios:
        raise ConfigError("simulate config needs a corpus block or scenarios")
    return SimulateConfig(out=_path(d, "out", "simulate config"),
                          seed=_int(d, "seed", 0), corpus=corpus,
                          scenarios=scenarios)


def load_train_config(path: str | Path) -> TrainConfig:
    d = _load_yaml(path)
    _require_keys(d, {"data", "out", "seed", "grid", "max_theta1", "window",
                      "tau", "beam_n", "beam_m", "marg_every", "l2",
                      "belief_l2"}, "train config")
    grid = d.get("grid", [0.0, 0.1, 0.5, 1.0, 2.0, 5.0])
    if (not isinstance(grid, list) or not grid
            or not all(isinstance(g, (int, float)) for g in grid)):
        raise ConfigError("grid must be a non-empty list of numbers")
    tau = d.get("tau")
    if tau is not None and not isinstance(tau, (int, float)):
        raise ConfigError("tau must be a number or null")
    return TrainConfig(data=_path(d, "data", "train config"),
                       out=_path(d, "out", "train config"),
                       seed=_int(d, "seed", 0),
                       grid=tuple(float(g) for g in grid),
                       max_theta1=_int(d, "max_theta1", 500),
                       window=_int(d, "window", 10),
                       tau=None if tau is None else float(tau),
                       beam_n=_int(d, "beam_n", 5),
                       beam_m=_int(d, "beam_m", 3),
                       marg_every=_bool(d, "marg_every", True),
                       l2=float(d.get("l2", 1e-3)),
                       belief_l2=float(d.get("belief_l2", 1e-5)))


def _trace_list(d: dict) -> tuple[str, ...]:
    traces = d.get("traces", [])
    if not isinstance(traces, list) or \
            not all(isinstance(t, str) for t in traces):
        raise ConfigError("traces must be a list of trace ids")
    return tuple(traces)


def load_parse_config(path: str | Path) -> ParseConfig:
    d = _load_yaml(path)
    _require_keys(d, {"model", "data", "out", "seed", "traces",
                      "dump_features"}, "parse config")
    return ParseConfig(model=_path(d, "model", "parse config"),
                       data=_path(d, "data", "parse config"),
                       out=_path(d, "out", "parse config"),
                       seed=_int(d, "seed", 0), traces=_trace_list(d),
                       dump_features=_bool(d, "dump_features", False))


def load_eval_config(path: str | Path) -> EvalConfig:
    d = _load_yaml(path)
    _require_keys(d, {"data", "parses", "out", "seed", "chance_seed"},
                  "eval config")
    return EvalConfig(data=_path(d, "data", "eval config"),
                      parses=_path(d, "parses", "eval config"),
                      out=_path(d, "out", "eval config"),
                      seed=_int(d, "seed", 0),
                      chance_seed=_int(d, "chance_seed", 0))


def load_keyframes_config(path: str | Path) -> KeyframesConfig:
    d = _load_yaml(path)
    _require_keys(d, {"model", "data", "out", "seed", "traces", "k",
                      "window", "source"}, "keyframes config")
    source = d.get("source", "marginal")
    if source not in ("marginal", "local"):
        raise ConfigError(f"unknown keyframe score source {source!r}")
    return KeyframesConfig(model=_path(d, "model", "keyframes config"),
                           data=_path(d, "data", "keyframes config"),
                           out=_path(d, "out", "keyframes config"),
                           seed=_int(d, "seed", 0), traces=_trace_list(d),
                           k=_int(d, "k", 10), window=_int(d, "window", 15),
                           source=str(source))
