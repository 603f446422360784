"""Experiment configuration in a small ``key = value`` text format.

Blank lines and lines starting with ``#`` are ignored. A ``schema_version``
line is required. Relative paths are resolved against the config file's
directory. Per-algorithm hyperparameter overrides use a dotted prefix with
the canonical lowercase algorithm name, e.g. ``bmf.learning_rate = 0.01``.

Example::

    schema_version = 1
    ratings = data/ratings.dat
    items = data/movies.dat
    demographics = data/users.dat
    format = movielens-1m
    split_ratio = 0.8
    seed = 42
    algorithms = ItemKNN,UserKNN,BMF,SVDpp,MostPopular
    n_groups = 10
    grouping = equal-width
    output_dir = out
    itemknn.neighborhood_size = 50
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass

from recaudit.dataset import FORMATS, MOVIELENS_1M
from recaudit.errors import UsageError
from recaudit.recommend.base import ALGORITHMS, AlgoConfig, canonical_algorithm

SCHEMA_VERSION = 1

_REQUIRED = object()


def _parse_bool(raw: str) -> bool:
    low = raw.lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _parse_scale(raw: str) -> tuple:
    parts = [p.strip() for p in raw.split(",")]
    if len(parts) != 2:
        raise ValueError("rating_scale takes two comma-separated numbers")
    return (float(parts[0]), float(parts[1]))


def _parse_algorithms(raw: str) -> tuple:
    names = [canonical_algorithm(p.strip()) for p in raw.split(",") if p.strip()]
    if not names:
        raise ValueError("algorithms list is empty")
    if len(set(names)) != len(names):
        raise ValueError("algorithm names must be unique")
    return tuple(names)


def _parse_optional_float(raw: str):
    return None if raw.lower() == "none" else float(raw)


# key -> (parser, default); _REQUIRED defaults must appear in the file
_GLOBAL_KEYS = {
    "ratings": (str, _REQUIRED),
    "items": (str, _REQUIRED),
    "demographics": (str, None),
    "format": (str, MOVIELENS_1M),
    "delimiter": (str, "\t"),
    "rating_scale": (_parse_scale, (1.0, 5.0)),
    "min_user_ratings": (int, 0),
    "min_item_ratings": (int, 0),
    "split_ratio": (float, 0.8),
    "seed": (int, 42),
    "algorithms": (_parse_algorithms, tuple(ALGORITHMS)),
    "n_groups": (int, 10),
    "grouping": (str, "equal-width"),
    "output_dir": (str, "out"),
    "list_size": (int, 10),
    "relevance_threshold": (_parse_optional_float, None),
}

_ALGO_FIELDS = {f.name: f.type for f in dataclasses.fields(AlgoConfig)
                if f.name != "algorithm"}


@dataclass(frozen=True)
class ExperimentConfig:
    ratings: str
    items: str
    demographics: str | None
    format: str
    delimiter: str
    rating_scale: tuple
    min_user_ratings: int
    min_item_ratings: int
    split_ratio: float
    seed: int
    algorithms: tuple
    n_groups: int
    grouping: str
    output_dir: str
    list_size: int
    relevance_threshold: float | None
    algo_configs: tuple

    def algo_config(self, name: str) -> AlgoConfig:
        name = canonical_algorithm(name)
        for cfg in self.algo_configs:
            if cfg.algorithm == name:
                return cfg
        raise UsageError(f"algorithm {name!r} is not part of this experiment")

    def replace(self, **kwargs) -> "ExperimentConfig":
        return dataclasses.replace(self, **kwargs)


def _coerce_algo_value(field: str, raw: str):
    kind = _ALGO_FIELDS[field]
    if kind in (bool, "bool"):
        return _parse_bool(raw)
    if kind in (int, "int"):
        return int(raw)
    if kind in (float, "float"):
        return float(raw)
    return raw


def parse_config(path) -> ExperimentConfig:
    """Parse and validate a config file; see the module docstring for the
    format. Unknown keys, bad values, and version mismatches all error."""
    if not os.path.exists(path):
        raise UsageError(f"config file not found: {path}")
    pairs: dict = {}
    lines: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, _, raw = stripped.partition("=")
            key, raw = key.strip(), raw.strip()
            if key in pairs:
                raise UsageError(f"{path}:{lineno}: duplicate key {key!r}")
            pairs[key] = raw
            lines[key] = lineno

    if "schema_version" not in pairs:
        raise UsageError(f"{path}: missing schema_version")
    if pairs.pop("schema_version") != str(SCHEMA_VERSION):
        raise UsageError(f"{path}: unsupported schema_version "
                         f"(this build reads version {SCHEMA_VERSION})")

    values: dict = {}
    overrides: dict = {}
    for key, raw in pairs.items():
        lineno = lines[key]
        if "." in key:
            algo, _, field = key.partition(".")
            try:
                algo = canonical_algorithm(algo)
            except Exception:
                raise UsageError(f"{path}:{lineno}: unknown algorithm "
                                 f"{key.partition('.')[0]!r}") from None
            if field not in _ALGO_FIELDS:
                raise UsageError(f"{path}:{lineno}: unknown option {field!r} "
                                 f"(valid: {', '.join(sorted(_ALGO_FIELDS))})")
            try:
                overrides.setdefault(algo, {})[field] = \
                    _coerce_algo_value(field, raw)
            except ValueError as exc:
                raise UsageError(f"{path}:{lineno}: {exc}") from None
            continue
        if key not in _GLOBAL_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r} "
                             f"(valid: {', '.join(sorted(_GLOBAL_KEYS))})")
        parser = _GLOBAL_KEYS[key][0]
        try:
            values[key] = parser(raw)
        except ValueError as exc:
            raise UsageError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from None

    for key, (_, default) in _GLOBAL_KEYS.items():
        if key not in values:
            if default is _REQUIRED:
                raise UsageError(f"{path}: missing required key {key!r}")
            values[key] = default

    if values["format"] not in FORMATS:
        raise UsageError(f"{path}: unknown format {values['format']!r} "
                         f"(valid: {', '.join(FORMATS)})")
    stray = set(overrides) - set(values["algorithms"])
    if stray:
        raise UsageError(f"{path}: overrides given for algorithms not in the "
                         f"experiment: {', '.join(sorted(stray))}")

    base = os.path.dirname(os.path.abspath(path))

    def resolve(p):
        return p if p is None or os.path.isabs(p) else os.path.join(base, p)

    algo_configs = []
    for name in values["algorithms"]:
        cfg = AlgoConfig(algorithm=name, seed=values["seed"],
                         list_size=values["list_size"])
        cfg = cfg.with_overrides(**overrides.get(name, {}))
        algo_configs.append(cfg)

    return ExperimentConfig(
        ratings=resolve(values["ratings"]),
        items=resolve(values["items"]),
        demographics=resolve(values["demographics"]),
        format=values["format"],
        delimiter=values["delimiter"],
        rating_scale=values["rating_scale"],
        min_user_ratings=values["min_user_ratings"],
        min_item_ratings=values["min_item_ratings"],
        split_ratio=values["split_ratio"],
        seed=values["seed"],
        algorithms=values["algorithms"],
        n_groups=values["n_groups"],
        grouping=values["grouping"],
        output_dir=resolve(values["output_dir"]),
        list_size=values["list_size"],
        relevance_threshold=values["relevance_threshold"],
        algo_configs=tuple(algo_configs),
    )


def config_echo(config: ExperimentConfig) -> dict:
    """Flat, JSON-friendly view of the config for report embedding."""
    echo = {key: getattr(config, key) for key in _GLOBAL_KEYS}
    echo["schema_version"] = SCHEMA_VERSION
    echo["algorithms"] = list(config.algorithms)
    echo["rating_scale"] = list(config.rating_scale)
    echo["algo_configs"] = {cfg.algorithm: dataclasses.asdict(cfg)
                            for cfg in config.algo_configs}
    return echo
