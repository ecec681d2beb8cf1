"""
Frame-rate subsampling and the three evaluation splits.

    protocol 1   subject split, every camera on both sides, plain MPJPE
    protocol 2   same split, MPJPE after Procrustes alignment
    protocol 3   subject split, test restricted to one held-out camera
                 which the training side never sees
"""

import enum
import logging
import math
from typing import Iterable, List, Optional, Sequence, Tuple

from ..errors import BadFps, ConfigInvalid, EmptySplit, UnknownCamera
from .records import FrameRecord

logger = logging.getLogger(__name__)

TARGET_FPS = 10
H36M_TRAIN_SUBJECTS = (1, 5, 6, 7, 8)
H36M_TEST_SUBJECTS = (9, 11)


class Protocol(enum.IntEnum):
    SUBJECTS = 1
    SUBJECTS_ALIGNED = 2
    CROSS_CAMERA = 3

    @classmethod
    def parse(cls, value) -> "Protocol":
        try:
            return cls(int(value))
        except (TypeError, ValueError):
            raise ConfigInvalid(f"protocol must be 1, 2 or 3, got {value!r}") from None


def subsample_10fps(records: Iterable[FrameRecord], source_fps: float) -> List[FrameRecord]:
    """
    Keep every floor(source_fps / 10)-th frame of each sequence.

    Raises:
        BadFps: source rate below 10 fps or not finite
    """
    if not math.isfinite(source_fps) or source_fps < TARGET_FPS:
        raise BadFps(f"source frame rate must be >= {TARGET_FPS} fps, got {source_fps}")
    step = int(source_fps // TARGET_FPS)
    kept = [r for r in records if r.frame % step == 0]
    if step > 1:
        logger.info(f"Subsampled {source_fps} fps to every {step}th frame: {len(kept)} records kept")
    return kept


def camera_ids(records: Iterable[FrameRecord]) -> List[str]:
    return sorted({r.camera.id for r in records})


def split_protocol(records: Sequence[FrameRecord], protocol, test_camera: Optional[str] = None,
                   train_subjects: Sequence[int] = H36M_TRAIN_SUBJECTS,
                   test_subjects: Sequence[int] = H36M_TEST_SUBJECTS) -> Tuple[List[FrameRecord], List[FrameRecord]]:
    """
    Split records into (train, test) for a protocol.

    Subjects listed on neither side are dropped with a warning. Under
    protocol 3 the held-out camera's records leave the training side and
    only its records stay on the test side.

    Raises:
        UnknownCamera: protocol 3 without a test camera present in the data
        EmptySplit: either side ends up empty
    """
    protocol = Protocol.parse(protocol)
    train_set, test_set = set(train_subjects), set(test_subjects)
    overlap = train_set & test_set
    if overlap:
        raise ConfigInvalid(f"subjects {sorted(overlap)} are on both sides of the split")

    if protocol is Protocol.CROSS_CAMERA:
        known = camera_ids(records)
        if test_camera is None or test_camera not in known:
            raise UnknownCamera(f"held-out camera {test_camera!r} is not among {known}")

    train: List[FrameRecord] = []
    test: List[FrameRecord] = []
    orphans = set()
    for rec in records:
        if rec.subject in train_set:
            if protocol is Protocol.CROSS_CAMERA and rec.camera.id == test_camera:
                continue
            train.append(rec)
        elif rec.subject in test_set:
            if protocol is Protocol.CROSS_CAMERA and rec.camera.id != test_camera:
                continue
            test.append(rec)
        else:
            orphans.add(rec.subject)
    if orphans:
        logger.warning(f"Subjects {sorted(orphans)} are in neither split and were excluded")
    if not train:
        raise EmptySplit(f"protocol {int(protocol)}: no training records")
    if not test:
        raise EmptySplit(f"protocol {int(protocol)}: no test records")
    logger.info(f"Protocol {int(protocol)} split: {len(train)} train / {len(test)} test records")
    return train, test
