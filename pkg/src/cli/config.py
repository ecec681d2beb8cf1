"""
Run configuration: packaged defaults, named profile, config file, --set
overrides and --seed/--out, merged in that order, then validated against
a JSON schema before any work starts.
"""

import json
import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence

import jsonschema
import yaml

from lifter.data.records import read_dataset
from lifter.data.synthetic import SynthConfig, generate_synthetic
from lifter.errors import ConfigInvalid, DiskError
from lifter.profiles import apply_profile, deep_merge, load_default_config
from lifter.trainer import TrainConfig
from lifter.utils import canonical_json, short_hash

logger = logging.getLogger(__name__)

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}
_INT = {"type": "integer"}
_POS_INT = {"type": "integer", "minimum": 1}
_NONNEG_INT = {"type": "integer", "minimum": 0}
_BOOL = {"type": "boolean"}
_SUBJECTS = {"type": "array", "items": _INT}
_NUM_LIST = {"type": "array", "items": _NUM}


def _section(properties: Dict[str, Any]) -> Dict[str, Any]:
    return {
        "type": "object",
        "properties": properties,
        "required": sorted(properties),
        "additionalProperties": False,
    }


SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "additionalProperties": False,
    "required": ["data", "synth", "augmentation", "model", "train", "eval", "output"],
    "properties": {
        "data": _section({
            "path": {"type": ["string", "null"]},
            "source_fps": {"type": "number", "minimum": 10},
        }),
        "synth": _section({
            "n_subjects": _POS_INT,
            "n_actions": _POS_INT,
            "frames_per_action": _POS_INT,
            "bone_lengths": {"type": "object", "additionalProperties": _POS},
            "angle_ranges": {"type": "object",
                             "additionalProperties": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}},
            "n_cameras": _POS_INT,
            "camera_radius": _POS,
            "camera_height": _NUM,
            "target_height": _NUM,
            "azimuth_offset_deg": _NUM,
            "scale_jitter": _NONNEG,
            "noise_sigma_px": _NONNEG,
            "seed": _NONNEG_INT,
        }),
        "augmentation": _section({
            "enabled": _BOOL,
            "step_deg": {"type": "number", "exclusiveMinimum": 0, "maximum": 360},
            "drop_nearest": _NONNEG_INT,
            "noise_sigma_px": {"oneOf": [_NONNEG, {"type": "array", "items": _NONNEG}]},
            "noise_enabled": _BOOL,
            "ring_center": {"oneOf": [{"type": "null"},
                                      {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}]},
            "min_test_distance_deg": {"oneOf": [{"type": "null"},
                                                {"type": "number", "minimum": 0, "maximum": 180}]},
            "coincident_tol_deg": _NONNEG,
        }),
        "model": _section({
            "hidden": _POS_INT,
            "m": _POS_INT,
            "dropout": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
            "leaky_slope": _NONNEG,
        }),
        "train": _section({
            "epochs": _NONNEG_INT,
            "batch_size": {"type": "integer", "minimum": 2},
            "lr0": _POS,
            "decay": _POS,
            "lambda1": _NONNEG,
            "lambda2": _NONNEG,
            "siamese_enabled": _BOOL,
            "same_pose_enabled": _BOOL,
            "seed": _NONNEG_INT,
            "workers": _NONNEG_INT,
            "prefetch": _POS_INT,
        }),
        "eval": _section({
            "protocol": {"enum": [1, 2, 3]},
            "test_camera": {"type": ["string", "null"]},
            "train_subjects": _SUBJECTS,
            "test_subjects": _SUBJECTS,
            "with_scale": _BOOL,
            "weights": {"enum": ["final", "best"]},
            "max_frames": _NONNEG_INT,
            "angles_deg": _NUM_LIST,
            "sweep_distances_deg": _NUM_LIST,
            "seeds": {"type": "array", "items": _NONNEG_INT, "minItems": 1},
        }),
        "output": _section({
            "dir": {"type": "string"},
            "include_timing": _BOOL,
        }),
    },
}


def validate_config(config: Dict[str, Any]) -> None:
    """
    Raises:
        ConfigInvalid: one message per schema violation, joined
    """
    validator = jsonschema.Draft7Validator(SCHEMA)
    errors = sorted(validator.iter_errors(config), key=lambda e: list(e.absolute_path))
    if errors:
        lines = [f"{'.'.join(str(p) for p in e.absolute_path) or '<root>'}: {e.message}" for e in errors]
        raise ConfigInvalid("invalid configuration:\n  " + "\n  ".join(lines))


def parse_set(item: str) -> Dict[str, Any]:
    """'section.key=value' as a nested override; the value is read as YAML"""
    if "=" not in item:
        raise ConfigInvalid(f"--set expects section.key=value, got {item!r}")
    path, raw = item.split("=", 1)
    keys = path.strip().split(".")
    if len(keys) < 2 or not all(keys):
        raise ConfigInvalid(f"--set key must be section.key, got {path!r}")
    try:
        value = yaml.safe_load(raw)
    except yaml.YAMLError as e:
        raise ConfigInvalid(f"--set {path}: cannot parse {raw!r}: {e}") from e
    override: Dict[str, Any] = {keys[-1]: value}
    for key in reversed(keys[:-1]):
        override = {key: override}
    return override


def load_config_file(path: str) -> Dict[str, Any]:
    """JSON or YAML run configuration file"""
    try:
        with open(path, "r") as f:
            data = yaml.safe_load(f)
    except OSError as e:
        raise DiskError(f"cannot read config {path}: {e}") from e
    except yaml.YAMLError as e:
        raise ConfigInvalid(f"config {path} is not valid JSON or YAML: {e}") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigInvalid(f"config {path} must be a mapping of sections")
    return data


@dataclass
class RunConfig:
    data: Dict[str, Any]
    profile: Optional[str] = None

    @property
    def config_hash(self) -> str:
        return short_hash(self.data)

    @property
    def seed(self) -> int:
        return int(self.data["train"]["seed"])

    @property
    def out_dir(self) -> str:
        return self.data["output"]["dir"]

    def section(self, name: str) -> Dict[str, Any]:
        return self.data[name]

    def to_json(self) -> str:
        return json.dumps(self.data, indent=2, sort_keys=True) + "\n"

    def canonical(self) -> str:
        return canonical_json(self.data)

    def train_config(self) -> TrainConfig:
        return TrainConfig.from_run_config(self.data, self.config_hash)

    def synth_config(self) -> SynthConfig:
        return SynthConfig(**self.data["synth"], subject_ids=self._subject_ids())

    def _subject_ids(self) -> Optional[list]:
        ev = self.data["eval"]
        ids = sorted(set(ev["train_subjects"]) | set(ev["test_subjects"]))
        return ids if len(ids) == self.data["synth"]["n_subjects"] else None

    def load_dataset(self) -> list:
        """Records from data.path, or a synthetic set built from the synth section"""
        path = self.data["data"]["path"]
        if path:
            return read_dataset(path)
        records = generate_synthetic(self.synth_config())
        logger.info(f"Generated {len(records)} synthetic records (no data.path configured)")
        return records


def resolve_config(profile: Optional[str] = None, config_path: Optional[str] = None,
                   sets: Sequence[str] = (), seed: Optional[int] = None,
                   out_dir: Optional[str] = None) -> RunConfig:
    config = load_default_config()
    if profile:
        config = apply_profile(config, profile)
    if config_path:
        config = deep_merge(config, load_config_file(config_path))
    for item in sets:
        config = deep_merge(config, parse_set(item))
    if seed is not None:
        config = deep_merge(config, {"train": {"seed": int(seed)}})
    if out_dir is not None:
        config = deep_merge(config, {"output": {"dir": out_dir}})
    validate_config(config)
    run = RunConfig(config, profile)
    logger.debug(f"Resolved configuration {run.config_hash}: {run.canonical()}")
    return run

