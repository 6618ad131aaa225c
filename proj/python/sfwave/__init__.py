"""Averaging experiments for a slow-fast stochastic wave equation.

Configs may be passed as dicts or JSON text. Heavy lifting happens in the
compiled ``_core`` module; this layer only converts JSON to Python objects.
"""

from __future__ import annotations

import json
from typing import Any, Mapping, Union

from . import _core
from ._core import ConfigError, ConfigInvalid, IoError, UsageError, order_fit, preset_names

__version__ = _core.version()

Config = Union[str, Mapping[str, Any]]

__all__ = [
    "ConfigError",
    "ConfigInvalid",
    "IoError",
    "UsageError",
    "compute_diagnostics",
    "compute_sweep",
    "config_hash",
    "fbar",
    "order_fit",
    "preset",
    "preset_names",
    "run_sweep",
    "validate",
]


def _text(config: Config) -> str:
    return config if isinstance(config, str) else json.dumps(config)


def preset(name: str) -> dict:
    """Built-in config as a dict, ready to be tweaked."""
    return json.loads(_core.preset_json(name))


def validate(config: Config) -> list[tuple[str, str]]:
    return _core.validate(_text(config))


def config_hash(config: Config) -> str:
    return _core.config_hash(_text(config))


def compute_sweep(config: Config, threads: int = 1) -> tuple[str, dict]:
    """Run the sweep in memory. Returns the CSV text and the parsed report."""
    csv_text, report = _core.compute_sweep(_text(config), threads)
    return csv_text, json.loads(report)


def run_sweep(config: Config, out_dir: str, threads: int = 1) -> dict:
    return json.loads(_core.run_sweep(_text(config), str(out_dir), threads))


def compute_diagnostics(config: Config) -> dict:
    return json.loads(_core.compute_diagnostics(_text(config)))


def fbar(config: Config, samples: int = 4096) -> dict:
    return json.loads(_core.fbar_json(_text(config), samples))
