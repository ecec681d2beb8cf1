# Named run profiles and the packaged reference results

import copy
import os
from functools import lru_cache
from typing import Any, Dict

import yaml

from .errors import ConfigInvalid

DATA_DIR = os.path.join(os.path.dirname(__file__), "../data")
DEFAULT_CONFIG_FILE = os.path.join(DATA_DIR, "default_config.yaml")
REFERENCE_FILE = os.path.join(DATA_DIR, "reference_results.yaml")

PROFILES = {
    "full": {
        "description": "Published hyperparameters: 100 epochs, 1024 hidden units, M=128.",
        "overrides": {},
    },
    "desk": {
        "description": "Synthetic ring of 9 cameras, about 20k frames, trains in minutes on a CPU.",
        "overrides": {
            "synth": {"n_actions": 4, "frames_per_action": 80, "n_cameras": 9},
            "model": {"hidden": 256, "m": 64},
            "train": {"epochs": 30, "batch_size": 256},
            "eval": {"max_frames": 2000},
        },
    },
    "smoke": {
        "description": "A few hundred frames and two epochs; checks the pipeline end to end.",
        "overrides": {
            "synth": {"n_actions": 2, "frames_per_action": 12, "n_cameras": 5},
            "augmentation": {"step_deg": 30.0},
            "model": {"hidden": 64, "m": 16},
            "train": {"epochs": 2, "batch_size": 64, "prefetch": 2},
            "eval": {"sweep_distances_deg": [15.0, 45.0, 90.0], "seeds": [0],
                     "angles_deg": [-180, -90, -45, 0, 45, 90, 180]},
        },
    },
}


def deep_merge(base: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    """New dict with nested sections of `overrides` merged key by key into `base`"""
    merged = copy.deepcopy(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def load_default_config() -> Dict[str, Any]:
    with open(DEFAULT_CONFIG_FILE, "r") as f:
        return yaml.safe_load(f)


def apply_profile(config: Dict[str, Any], name: str) -> Dict[str, Any]:
    if name not in PROFILES:
        raise ConfigInvalid(f"unknown profile {name!r}; choose from {sorted(PROFILES)}")
    return deep_merge(config, PROFILES[name]["overrides"])


def is_smoke_sized(config: Dict[str, Any]) -> bool:
    """True when a run is no larger than the smoke profile in epochs and width"""
    smoke = PROFILES["smoke"]["overrides"]
    return (config["train"]["epochs"] <= smoke["train"]["epochs"]
            and config["model"]["hidden"] <= smoke["model"]["hidden"])


@lru_cache(maxsize=1)
def _reference() -> Dict[str, Any]:
    with open(REFERENCE_FILE, "r") as f:
        return yaml.safe_load(f)


def reference_results() -> Dict[str, Any]:
    return copy.deepcopy(_reference())
