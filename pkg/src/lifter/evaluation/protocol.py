"""
Protocol harness: split, lift the test side, score per action.
"""

import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np
import pandas as pd

from ..data.normalization import NormStats
from ..data.protocols import H36M_TEST_SUBJECTS, H36M_TRAIN_SUBJECTS, Protocol, split_protocol
from ..data.records import FrameRecord
from ..errors import EmptySplit, MissingGroundTruth
from ..geometry import Rotation3
from ..model import LiftingModel, predict
from .metrics import per_frame_mpjpe, per_frame_mpjpe_procrustes

logger = logging.getLogger(__name__)

AVERAGE_COLUMN = "Average"


@dataclass
class EvalReport:
    protocol: int
    per_action: Dict[str, float]
    frames_per_action: Dict[str, int]
    average: float
    n_frames: int
    model_fingerprint: str = ""
    seed: int = 0
    config_hash: str = ""
    weights: str = "final"
    test_camera: Optional[str] = None
    with_scale: bool = False
    extra: Dict[str, float] = field(default_factory=dict)

    @classmethod
    def from_errors(cls, protocol: int, actions: Sequence[str], errors: np.ndarray, **meta) -> "EvalReport":
        """Group per-frame errors by action; the average is the frame-weighted mean"""
        errors = np.asarray(errors, dtype=np.float64)
        frame = pd.DataFrame({"action": list(actions), "error": errors})
        grouped = frame.groupby("action", sort=True)["error"]
        per_action = {str(k): float(v) for k, v in grouped.mean().items()}
        counts = {str(k): int(v) for k, v in grouped.size().items()}
        return cls(
            protocol=int(protocol),
            per_action=per_action,
            frames_per_action=counts,
            average=float(np.mean(errors)) if len(frame) else 0.0,
            n_frames=int(len(frame)),
            **meta,
        )

    def recomputed_average(self) -> float:
        return weighted_average(self.per_action, self.frames_per_action)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "EvalReport":
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def table(self) -> pd.DataFrame:
        """One row, actions as columns, average last"""
        columns = sorted(self.per_action) + [AVERAGE_COLUMN]
        values = [self.per_action[a] for a in sorted(self.per_action)] + [self.average]
        return pd.DataFrame([values], columns=columns, index=[f"Protocol #{self.protocol}"])

    def to_text(self) -> str:
        return self.table().to_string(float_format=lambda v: f"{v:.1f}")


def weighted_average(per_action: Dict[str, float], counts: Dict[str, int]) -> float:
    total = sum(counts[a] for a in per_action)
    if total == 0:
        return 0.0
    return float(sum(per_action[a] * counts[a] for a in per_action) / total)


def ground_truth(records: Sequence[FrameRecord]) -> np.ndarray:
    missing = [r for r in records if r.pose3d_cam is None]
    if missing:
        r = missing[0]
        raise MissingGroundTruth(f"record {r.subject}/{r.action}/{r.frame} has no 3D ground truth")
    return np.stack([r.pose3d_cam.joints for r in records])


def frame_errors(model: LiftingModel, records: Sequence[FrameRecord], aligned: bool = False,
                 with_scale: bool = False, stats: Optional[NormStats] = None,
                 embedding_rotation: Optional[Rotation3] = None, workers: int = 1) -> np.ndarray:
    """Per-frame MPJPE (mm) of the model on records, optionally Procrustes-aligned"""
    if not records:
        raise EmptySplit("no records to evaluate")
    gts = ground_truth(records)
    preds = predict(model, np.stack([r.pose2d_det.joints for r in records]), stats,
                    embedding_rotation=embedding_rotation, workers=workers)
    if aligned:
        return per_frame_mpjpe_procrustes(preds, gts, with_scale)
    return per_frame_mpjpe(preds, gts)


def evaluate_records(model: LiftingModel, records: Sequence[FrameRecord], protocol=1,
                     with_scale: bool = False, stats: Optional[NormStats] = None,
                     workers: int = 1, **meta) -> EvalReport:
    """Score already-split test records under a protocol's metric"""
    protocol = Protocol.parse(protocol)
    aligned = protocol is Protocol.SUBJECTS_ALIGNED
    errors = frame_errors(model, records, aligned, with_scale, stats, workers=workers)
    return EvalReport.from_errors(
        int(protocol), [r.action for r in records], errors,
        model_fingerprint=model.fingerprint(), with_scale=with_scale and aligned, **meta,
    )


def run_protocol(model: LiftingModel, dataset: Sequence[FrameRecord], protocol, test_camera: Optional[str] = None,
                 train_subjects: Sequence[int] = H36M_TRAIN_SUBJECTS,
                 test_subjects: Sequence[int] = H36M_TEST_SUBJECTS, with_scale: bool = False,
                 stats: Optional[NormStats] = None, workers: int = 1, **meta) -> EvalReport:
    """
    Split the dataset for a protocol and score the test side.

    Protocol 2 aligns each prediction rigidly (with_scale adds a uniform
    scale); protocols 1 and 3 use plain MPJPE.
    """
    _, test = split_protocol(dataset, protocol, test_camera, train_subjects, test_subjects)
    report = evaluate_records(model, test, protocol, with_scale, stats, workers,
                              test_camera=test_camera, **meta)
    logger.info(f"Protocol {report.protocol}: average {report.average:.2f} mm over {report.n_frames} frames")
    return report

