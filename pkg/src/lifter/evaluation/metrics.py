"""
Mean per-joint position error, plain and after Procrustes alignment.
"""

from typing import Sequence, Union

import numpy as np

from ..errors import ShapeMismatch
from ..geometry import Pose3D, procrustes_align_batch

PoseBatch = Union[np.ndarray, Sequence[Pose3D]]


def as_pose_batch(poses: PoseBatch) -> np.ndarray:
    """batch x 3 x n float array from an array or a list of Pose3D"""
    if isinstance(poses, np.ndarray):
        arr = poses.astype(np.float64, copy=False)
    else:
        arr = np.stack([p.joints if isinstance(p, Pose3D) else np.asarray(p) for p in poses]) \
            if len(poses) else np.zeros((0, 3, 0))
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3 or arr.shape[1] != 3:
        raise ShapeMismatch(f"expected batch x 3 x n poses, got {arr.shape}")
    return arr


def per_frame_mpjpe(preds: PoseBatch, gts: PoseBatch) -> np.ndarray:
    """Mean joint error of every frame, mm"""
    p = as_pose_batch(preds)
    g = as_pose_batch(gts)
    if p.shape != g.shape:
        raise ShapeMismatch(f"prediction batch {p.shape} does not match ground truth {g.shape}")
    return np.sqrt(np.sum((p - g) ** 2, axis=1)).mean(axis=1)


def mpjpe(preds: PoseBatch, gts: PoseBatch) -> float:
    """Mean over frames and joints of the Euclidean joint error, mm"""
    errors = per_frame_mpjpe(preds, gts)
    return float(errors.mean()) if len(errors) else 0.0


def per_frame_mpjpe_procrustes(preds: PoseBatch, gts: PoseBatch, with_scale: bool = False) -> np.ndarray:
    p = as_pose_batch(preds)
    g = as_pose_batch(gts)
    if p.shape != g.shape:
        raise ShapeMismatch(f"prediction batch {p.shape} does not match ground truth {g.shape}")
    if len(p) == 0:
        return np.zeros(0)
    return per_frame_mpjpe(procrustes_align_batch(p, g, with_scale), g)


def mpjpe_procrustes(preds: PoseBatch, gts: PoseBatch, with_scale: bool = False) -> float:
    """MPJPE after aligning every prediction onto its ground truth"""
    errors = per_frame_mpjpe_procrustes(preds, gts, with_scale)
    return float(errors.mean()) if len(errors) else 0.0
