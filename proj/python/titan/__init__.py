"""Python bindings for the titan UAV placement library."""

import json

from ._titan import (
    ConfigError,
    Scene,
    TleError,
    __version__,
    evaluate,
    jain_counts,
    jain_rates,
    load_scene,
    manhattan,
    parse_tle_text,
    shannon_capacity,
    tpe_minimize,
    trace,
    visibility,
)
from . import _titan


def load_config(path):
    """Scenario config (.toml or .json) as a dict with every default filled in."""
    return json.loads(_titan.config_json(str(path)))


def config_hash(config):
    return _titan.config_hash(json.dumps(config))


def optimize(config):
    """Single placement run; returns final KPIs and UAV positions."""
    return _titan.optimize_json(json.dumps(config))


def run_scenarios(config, out_dir, fmt="csv"):
    """Runs config["scenarios"] and writes the result tables; returns file names."""
    return _titan.run_scenarios_json(json.dumps(config), str(out_dir), fmt)


__all__ = [
    "ConfigError",
    "Scene",
    "TleError",
    "__version__",
    "config_hash",
    "evaluate",
    "jain_counts",
    "jain_rates",
    "load_config",
    "load_scene",
    "manhattan",
    "optimize",
    "parse_tle_text",
    "run_scenarios",
    "shannon_capacity",
    "tpe_minimize",
    "trace",
    "visibility",
]
