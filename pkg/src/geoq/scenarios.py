"""Built-in scenarios and configuration-file loading."""
from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import Any

import simplejson

from .program_params import ScenarioConfig

logger = logging.getLogger(__name__)

BUILTIN_SCENARIOS: dict[str, dict[str, Any]] = {
    "freeze-flat": {
        "kind": "classical",
        "model": {"id": "constant", "c": 1.0},
        "hbar": [0.1, 0.05, 0.01],
        # 100 cyclotron periods at ℏ = 0.05
        "T": 100 * 2 * math.pi * 0.05,
        "xi0": [1.0, 0.0],
    },
    "quartic-scan": {
        "kind": "classical",
        "model": {"id": "quartic", "c": 1.0, "lam": 0.1},
        "hbar": [0.1, 0.05, 0.02, 0.01],
        "T": 5.0,
        "xi0": [1.0, 0.0],
    },
    "harmonic-scan": {
        "kind": "classical",
        "model": {"id": "shifted-harmonic", "c": 1.0},
        "hbar": [0.1, 0.05, 0.02, 0.01],
        "T": 5.0,
        "xi0": [1.0, 0.0],
    },
    "landau-flat": {
        "kind": "quantum",
        "model": {"id": "constant", "c": 1.0},
        "hbar": [0.1, 0.05],
        "grid": {"half_width": 6.0, "points": 256},
        "eigenpairs": 10,
        "probe_bands": 2,
    },
    "shifted-harmonic": {
        "kind": "quantum",
        "model": {"id": "shifted-harmonic", "c": 1.0},
        "hbar": [0.1, 0.05],
        "grid": {"half_width": 6.0, "points": 256},
        "eigenpairs": 10,
        "probe_bands": 1,
    },
    "checks-default": {
        "kind": "checks",
        "model": {"id": "quartic", "c": 1.0, "lam": 0.1},
        "hbar": [0.1],
    },
}

DEFAULT_SCENARIOS = {
    "classical": "quartic-scan",
    "quantum": "shifted-harmonic",
    "checks": "checks-default",
}


class ConfigFileError(Exception):
    """Raised when a configuration file cannot be read or parsed."""


def read_config_file(path: Path) -> dict[str, Any]:
    """Read a JSON configuration file into a dict."""
    try:
        with open(path, encoding="utf-8") as fd:
            data = simplejson.load(fd)
    except OSError as e:
        raise ConfigFileError(f"cannot read {path}: {e.strerror}") from None
    except simplejson.JSONDecodeError as e:
        raise ConfigFileError(f"invalid JSON in {path}: {e}") from None
    if not isinstance(data, dict):
        raise ConfigFileError(f"{path} must contain a JSON object")
    return data


def _merge(base: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    merged = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_scenario(
    scenario_id: str | None = None,
    config_path: Path | None = None,
    overrides: dict[str, Any] | None = None,
    kind: str | None = None,
) -> ScenarioConfig:
    """
    Build a validated scenario.

    Layers, later ones winning: built-in scenario (explicit, named in the file, or the default for ``kind``),
    configuration file, command-line overrides.
    """
    file_data = read_config_file(config_path) if config_path else {}
    scenario_id = scenario_id or file_data.get("scenario_id")
    if scenario_id is None and not file_data and kind is not None:
        scenario_id = DEFAULT_SCENARIOS.get(kind)
    base: dict[str, Any] = {}
    if scenario_id is not None:
        if scenario_id in BUILTIN_SCENARIOS:
            base = {"scenario_id": scenario_id, **BUILTIN_SCENARIOS[scenario_id]}
        elif not file_data:
            raise ConfigFileError(f"unknown scenario {scenario_id!r}; choose one of {sorted(BUILTIN_SCENARIOS)}")
    data = _merge(_merge(base, file_data), overrides or {})
    if scenario_id is not None:
        data["scenario_id"] = scenario_id
    config = ScenarioConfig.model_validate(data)
    logger.debug(f"Scenario {config.scenario_id} (config hash {config.config_hash()[:12]})")
    return config
