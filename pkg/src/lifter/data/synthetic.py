"""
Procedural mocap generator: 16-joint skeletons driven by smooth joint-angle
trajectories, seen by a ring of cameras around the subject.
"""

import logging
import os
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import yaml

from ..compute import RngStream
from ..errors import ConfigInvalid
from ..geometry import Camera, look_at_camera, project, rot_vertical, to_camera_hip_centered
from ..types import N_JOINTS
from .augmentation import AugmentationConfig, simulate_detector_noise
from .records import FrameRecord

logger = logging.getLogger(__name__)

SKELETON_FILE = os.path.join(os.path.dirname(__file__), "../../data/skeleton.yaml")

H36M_SUBJECTS = [1, 5, 6, 7, 8, 9, 11]
H36M_ACTIONS = [
    "Directions", "Discussion", "Eating", "Greeting", "Phoning", "Photo", "Posing",
    "Purchases", "Sitting", "SittingDown", "Smoking", "Waiting", "WalkDog", "Walking",
    "WalkTogether",
]

# Trajectory frequency range, in full cycles per action sequence
CYCLES_RANGE = (0.5, 2.0)


@lru_cache(maxsize=1)
def load_skeleton(path: str = SKELETON_FILE) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        skeleton = yaml.safe_load(f)
    if len(skeleton["joints"]) != N_JOINTS:
        raise ConfigInvalid(f"skeleton file defines {len(skeleton['joints'])} joints, expected {N_JOINTS}")
    return skeleton


def default_bone_lengths() -> Dict[str, float]:
    return dict(load_skeleton()["bone_lengths_mm"])


def default_angle_ranges() -> Dict[str, List[float]]:
    return {k: list(v) for k, v in load_skeleton()["angle_ranges_deg"].items()}


@dataclass
class SynthConfig:
    n_subjects: int = 7
    n_actions: int = 4
    frames_per_action: int = 80
    bone_lengths: Dict[str, float] = field(default_factory=default_bone_lengths)
    angle_ranges: Dict[str, List[float]] = field(default_factory=default_angle_ranges)
    camera_radius: float = 4500.0
    camera_height: float = 1600.0
    target_height: float = 1000.0
    n_cameras: int = 9
    azimuth_offset_deg: float = 0.0
    scale_jitter: float = 0.05
    noise_sigma_px: float = 0.0
    subject_ids: Optional[List[int]] = None
    seed: int = 0

    def __post_init__(self):
        for name in ("n_subjects", "n_actions", "frames_per_action", "n_cameras"):
            if getattr(self, name) < 1:
                raise ConfigInvalid(f"synth.{name} must be >= 1, got {getattr(self, name)}")
        bones = default_bone_lengths()
        unknown = set(self.bone_lengths) - set(bones)
        if unknown:
            raise ConfigInvalid(f"unknown bones {sorted(unknown)}; known: {sorted(bones)}")
        bones.update(self.bone_lengths)
        self.bone_lengths = {k: float(v) for k, v in bones.items()}
        if any(v <= 0 for v in self.bone_lengths.values()):
            raise ConfigInvalid("bone lengths must be positive")

        ranges = default_angle_ranges()
        unknown = set(self.angle_ranges) - set(ranges)
        if unknown:
            raise ConfigInvalid(f"unknown joint angles {sorted(unknown)}; known: {sorted(ranges)}")
        ranges.update(self.angle_ranges)
        for name, (lo, hi) in ranges.items():
            if lo > hi:
                raise ConfigInvalid(f"angle range {name}: low {lo} > high {hi}")
        self.angle_ranges = {k: [float(v[0]), float(v[1])] for k, v in ranges.items()}

        if not 0.0 <= self.scale_jitter < 0.5:
            raise ConfigInvalid(f"scale_jitter must be in [0, 0.5), got {self.scale_jitter}")
        if self.noise_sigma_px < 0:
            raise ConfigInvalid("synth.noise_sigma_px must be >= 0")
        extent = self.pose_extent_mm()
        if self.camera_radius <= 1.1 * extent:
            raise ConfigInvalid(
                f"camera radius {self.camera_radius} mm must exceed 1.1 x the pose extent {extent:.0f} mm"
            )
        if self.subject_ids is None:
            if self.n_subjects <= len(H36M_SUBJECTS):
                self.subject_ids = H36M_SUBJECTS[:self.n_subjects]
            else:
                self.subject_ids = list(range(1, self.n_subjects + 1))
        if len(self.subject_ids) != self.n_subjects or len(set(self.subject_ids)) != self.n_subjects:
            raise ConfigInvalid("subject_ids must list n_subjects distinct ids")

    @classmethod
    def from_dict(cls, data: Dict) -> "SynthConfig":
        return cls(**data)

    @property
    def actions(self) -> List[str]:
        if self.n_actions <= len(H36M_ACTIONS):
            return H36M_ACTIONS[:self.n_actions]
        return H36M_ACTIONS + [f"Action{k}" for k in range(len(H36M_ACTIONS), self.n_actions)]

    @property
    def hip_height(self) -> float:
        return self.bone_lengths["thigh"] + self.bone_lengths["shin"]

    def pose_extent_mm(self) -> float:
        """Largest reach from the ground-plane origin: hip height plus the longest chain from the hip"""
        b = self.bone_lengths
        arm = b["spine"] + b["neck"] + b["shoulder"] + b["upper_arm"] + b["forearm"]
        head = b["spine"] + b["neck"] + b["head"]
        leg = b["hip"] + b["thigh"] + b["shin"]
        return (self.hip_height + max(arm, head, leg)) * (1.0 + self.scale_jitter)


def _rx(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def _rz(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def skeleton_pose(angles: Dict[str, float], bone_lengths: Dict[str, float], yaw_deg: float = 0.0,
                  scale: float = 1.0, hip: Sequence[float] = (0.0, 0.0, 0.0)) -> np.ndarray:
    """
    World joints (3 x 16, mm) of one skeleton posture.

    Args:
        angles: degrees keyed "<joint>.pitch" / "<joint>.roll" (joint names
            from skeleton.yaml); missing angles are zero
        bone_lengths: millimetres per bone name
        yaw_deg: body heading about the vertical axis
        scale: uniform subject scale
        hip: world position of joint 0
    """
    joints = load_skeleton()["joints"]
    index = {j["name"]: i for i, j in enumerate(joints)}
    pos = np.zeros((3, N_JOINTS))
    orient = [None] * N_JOINTS
    pos[:, 0] = hip
    orient[0] = rot_vertical(yaw_deg).m
    for i, joint in enumerate(joints[1:], start=1):
        parent = index[joint["parent"]]
        local = np.eye(3)
        if joint.get("roll"):
            local = local @ _rz(np.radians(joint["roll_sign"] * angles.get(joint["name"] + ".roll", 0.0)))
        if joint.get("pitch"):
            local = local @ _rx(np.radians(joint["pitch_sign"] * angles.get(joint["name"] + ".pitch", 0.0)))
        orient[i] = orient[parent] @ local
        length = bone_lengths[joint["bone"]] * scale
        pos[:, i] = pos[:, parent] + orient[i] @ np.asarray(joint["rest"], dtype=np.float64) * length
    return pos


def ring_cameras(cfg: SynthConfig) -> List[Camera]:
    """n_cameras evenly spaced on the circle, all aimed at the subject"""
    cams = []
    target = (0.0, cfg.target_height, 0.0)
    for k in range(cfg.n_cameras):
        az = np.radians(cfg.azimuth_offset_deg + k * 360.0 / cfg.n_cameras)
        center = (cfg.camera_radius * np.sin(az), cfg.camera_height, cfg.camera_radius * np.cos(az))
        cams.append(look_at_camera(center, target, camera_id=f"cam{k}"))
    return cams


def _trajectories(cfg: SynthConfig, gen: np.random.Generator) -> Dict[str, np.ndarray]:
    """Angle per frame for every joint channel plus the root yaw"""
    t = np.arange(cfg.frames_per_action) / cfg.frames_per_action
    channels: Dict[str, np.ndarray] = {}
    joints = load_skeleton()["joints"]
    names = ["root_yaw"] + [f"{j['name']}.{kind}" for j in joints[1:] for kind in ("pitch", "roll") if j.get(kind)]
    by_name = {j["name"]: j for j in joints[1:]}
    for name in names:
        range_key = "root_yaw" if name == "root_yaw" else by_name[name.split(".")[0]][name.split(".")[1]]
        lo, hi = cfg.angle_ranges[range_key]
        phase = gen.uniform(0.0, 2.0 * np.pi)
        cycles = gen.uniform(*CYCLES_RANGE)
        channels[name] = lo + (hi - lo) * (0.5 + 0.5 * np.sin(2.0 * np.pi * cycles * t + phase))
    return channels


def generate_synthetic(cfg: SynthConfig) -> List[FrameRecord]:
    """
    Records ordered by subject, action, frame, camera. A pure function of
    the config including its seed.
    """
    cams = ring_cameras(cfg)
    root = RngStream(cfg.seed)
    noise_cfg = AugmentationConfig(noise_sigma_px=cfg.noise_sigma_px, noise_enabled=cfg.noise_sigma_px > 0)
    records: List[FrameRecord] = []

    for s_idx, subject in enumerate(cfg.subject_ids):
        scale = 1.0 + cfg.scale_jitter * root.substream(s_idx, 0xB0DE).next().uniform(-1.0, 1.0)
        hip = np.array([0.0, cfg.hip_height * scale, 0.0])
        for a_idx, action in enumerate(cfg.actions):
            seq_rng = root.substream(s_idx, a_idx)
            channels = _trajectories(cfg, seq_rng.next())
            noise_rng = seq_rng.substream(1)
            for frame in range(cfg.frames_per_action):
                angles = {k: float(v[frame]) for k, v in channels.items()}
                world = skeleton_pose(angles, cfg.bone_lengths, angles["root_yaw"], scale, hip)
                for cam in cams:
                    p2d = project(cam, world)
                    if noise_cfg.noise_enabled:
                        p2d = simulate_detector_noise(p2d, noise_cfg, noise_rng)
                    records.append(FrameRecord(
                        subject=subject,
                        action=action,
                        frame=frame,
                        camera=cam,
                        pose2d_det=p2d,
                        pose3d_cam=to_camera_hip_centered(cam, world),
                        synthetic_cam=False,
                        root_world=hip.copy(),
                    ))
    logger.info(
        f"Generated {len(records)} synthetic records: {cfg.n_subjects} subjects x {cfg.n_actions} actions "
        f"x {cfg.frames_per_action} frames x {cfg.n_cameras} cameras"
    )
    return records


def bone_length_table(pose: np.ndarray) -> List[Tuple[str, float]]:
    """(bone, length) for every non-root joint of a 3 x 16 pose, in skeleton order"""
    joints = load_skeleton()["joints"]
    index = {j["name"]: i for i, j in enumerate(joints)}
    return [
        (j["bone"], float(np.linalg.norm(pose[:, i] - pose[:, index[j["parent"]]])))
        for i, j in enumerate(joints) if i > 0
    ]
