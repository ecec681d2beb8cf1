"""
FrameRecord and the JSON Lines dataset format.

One record per line, UTF-8, fields:

    schema         int      format version (1)
    subject        int      subject id
    action         str      action label
    frame          int      frame index within (subject, action, camera)
    camera         object   id, rot (9 row-major), center (mm), focal (px), principal (px)
    pose2d         2 x 16   detected joints, pixels
    pose3d_cam     3 x 16   hip-centered camera-frame ground truth, mm (or null)
    synthetic_cam  bool     camera produced by augmentation
    root_world     3        hip in world mm (or null)
"""

import json
import logging
import os
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence

import numpy as np

from ..errors import DataError, DiskError, LifterError, ParseError, SchemaVersionMismatch
from ..geometry import Camera, Pose2D, Pose3D, PoseFrame, camera_to_world
from ..types import FrameKey
from ..utils import atomic_write_text, missing_keys

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
REQUIRED_FIELDS = ("schema", "subject", "action", "frame", "camera", "pose2d")


@dataclass(eq=False)
class FrameRecord:
    """One observation: a 2D detection and its camera-frame ground truth"""

    subject: int
    action: str
    frame: int
    camera: Camera
    pose2d_det: Pose2D
    pose3d_cam: Optional[Pose3D] = None
    synthetic_cam: bool = False
    root_world: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.pose3d_cam is not None and self.pose3d_cam.n_joints != self.pose2d_det.n_joints:
            raise DataError(
                f"record {self.key}: 2D pose has {self.pose2d_det.n_joints} joints, "
                f"3D pose has {self.pose3d_cam.n_joints}"
            )
        if self.root_world is not None:
            self.root_world = np.asarray(self.root_world, dtype=np.float64).reshape(3)

    @property
    def key(self) -> FrameKey:
        """Identity of the underlying pose, shared by every camera seeing it"""
        return (self.subject, self.action, self.frame)

    def world_pose(self) -> Optional[np.ndarray]:
        """World-frame joints when both ground truth and root position are known"""
        if self.pose3d_cam is None or self.root_world is None:
            return None
        return camera_to_world(self.camera, self.pose3d_cam.joints, self.root_world)

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "subject": self.subject,
            "action": self.action,
            "frame": self.frame,
            "camera": self.camera.to_dict(),
            "pose2d": self.pose2d_det.joints.tolist(),
            "pose3d_cam": None if self.pose3d_cam is None else self.pose3d_cam.joints.tolist(),
            "synthetic_cam": self.synthetic_cam,
            "root_world": None if self.root_world is None else self.root_world.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FrameRecord":
        pose3d = data.get("pose3d_cam")
        return cls(
            subject=int(data["subject"]),
            action=str(data["action"]),
            frame=int(data["frame"]),
            camera=Camera.from_dict(data["camera"]),
            pose2d_det=Pose2D(np.asarray(data["pose2d"], dtype=np.float64)),
            pose3d_cam=None if pose3d is None else Pose3D(np.asarray(pose3d, dtype=np.float64),
                                                          PoseFrame.HIP_CENTERED),
            synthetic_cam=bool(data.get("synthetic_cam", False)),
            root_world=data.get("root_world"),
        )

    def same_as(self, other: "FrameRecord") -> bool:
        """Field-for-field equality (exact floats)"""
        def _eq(a, b):
            if a is None or b is None:
                return a is None and b is None
            return np.array_equal(a, b)

        return (
            self.key == other.key
            and self.synthetic_cam == other.synthetic_cam
            and self.camera.same_as(other.camera)
            and np.array_equal(self.pose2d_det.joints, other.pose2d_det.joints)
            and _eq(None if self.pose3d_cam is None else self.pose3d_cam.joints,
                    None if other.pose3d_cam is None else other.pose3d_cam.joints)
            and _eq(self.root_world, other.root_world)
        )


def encode_record(record: FrameRecord) -> str:
    return json.dumps(record.to_dict(), separators=(",", ":"))


def decode_record(line: str, line_no: Optional[int] = None) -> FrameRecord:
    """
    Raises:
        ParseError: invalid JSON, missing fields or malformed arrays
        SchemaVersionMismatch: unsupported schema version
    """
    try:
        data = json.loads(line)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON ({e.msg})", line_no) from e
    if not isinstance(data, dict):
        raise ParseError("record is not a JSON object", line_no)
    missing = missing_keys(data, REQUIRED_FIELDS)
    if missing:
        raise ParseError(f"missing fields {', '.join(missing)}", line_no)
    if data["schema"] != SCHEMA_VERSION:
        where = f"line {line_no}: " if line_no is not None else ""
        raise SchemaVersionMismatch(
            f"{where}schema version {data['schema']!r}, this reader supports {SCHEMA_VERSION}"
        )
    try:
        return FrameRecord.from_dict(data)
    except (LifterError, KeyError, TypeError, ValueError) as e:
        raise ParseError(f"malformed record: {e}", line_no) from e


def iter_dataset(path: str) -> Iterator[FrameRecord]:
    """Stream records in file order; blank lines are skipped"""
    try:
        with open(path, "r", encoding="utf-8") as f:
            for line_no, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                yield decode_record(line, line_no)
    except OSError as e:
        raise DiskError(f"cannot read dataset {path}: {e}") from e


def read_dataset(path: str) -> List[FrameRecord]:
    records = list(iter_dataset(path))
    logger.info(f"Read {len(records)} records from {path}")
    return records


def write_dataset(records: Sequence[FrameRecord], path: str) -> None:
    """Atomically write records as JSON Lines, in the given order"""
    text = "".join(encode_record(r) + "\n" for r in records)
    atomic_write_text(path, text)
    logger.info(f"Wrote {len(records)} records to {os.path.abspath(path)}")
