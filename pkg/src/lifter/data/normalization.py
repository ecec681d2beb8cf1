"""
Per-coordinate standardization of 2D inputs and 3D targets.

Poses are flattened joint-major: a 3 x n pose becomes
[x0, y0, z0, x1, y1, z1, ...].
"""

import hashlib
import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ..errors import EmptySplit, LeakageError, ShapeMismatch
from ..types import N_JOINTS

logger = logging.getLogger(__name__)

STD_FLOOR = 1e-6


def flatten_poses(poses: np.ndarray) -> np.ndarray:
    """batch x d x n  ->  batch x (n * d), joint-major"""
    poses = np.asarray(poses, dtype=np.float64)
    if poses.ndim != 3:
        raise ShapeMismatch(f"expected batch x d x n poses, got {poses.shape}")
    return np.ascontiguousarray(np.transpose(poses, (0, 2, 1))).reshape(len(poses), -1)


def unflatten_poses(flat: np.ndarray, dims: int, n_joints: int = N_JOINTS) -> np.ndarray:
    """batch x (n * d)  ->  batch x d x n"""
    flat = np.asarray(flat, dtype=np.float64)
    if flat.ndim != 2 or flat.shape[1] != dims * n_joints:
        raise ShapeMismatch(f"expected batch x {dims * n_joints}, got {flat.shape}")
    return np.transpose(flat.reshape(len(flat), n_joints, dims), (0, 2, 1))


def split_fingerprint(records: Iterable) -> str:
    """Order-independent identity of a set of records (subject, action, frame, camera)"""
    keys = sorted(f"{r.subject}|{r.action}|{r.frame}|{r.camera.id}" for r in records)
    digest = hashlib.sha256("\n".join(keys).encode("utf-8")).hexdigest()
    return digest[:16]


@dataclass(eq=False)
class NormStats:
    mean2d: np.ndarray
    std2d: np.ndarray
    mean3d: np.ndarray
    std3d: np.ndarray
    fitted_on: str = ""

    def __post_init__(self):
        self.mean2d = np.asarray(self.mean2d, dtype=np.float64).reshape(-1)
        self.std2d = np.maximum(np.asarray(self.std2d, dtype=np.float64).reshape(-1), STD_FLOOR)
        self.mean3d = np.asarray(self.mean3d, dtype=np.float64).reshape(-1)
        self.std3d = np.maximum(np.asarray(self.std3d, dtype=np.float64).reshape(-1), STD_FLOOR)
        if self.mean2d.shape != self.std2d.shape or self.mean3d.shape != self.std3d.shape:
            raise ShapeMismatch("normalization mean/std shapes differ")

    @property
    def n_joints(self) -> int:
        return self.mean2d.shape[0] // 2

    def normalize_2d(self, flat2d: np.ndarray) -> np.ndarray:
        return (self._check(flat2d, self.mean2d) - self.mean2d) / self.std2d

    def denormalize_2d(self, norm2d: np.ndarray) -> np.ndarray:
        return self._check(norm2d, self.mean2d) * self.std2d + self.mean2d

    def normalize_3d(self, flat3d: np.ndarray) -> np.ndarray:
        return (self._check(flat3d, self.mean3d) - self.mean3d) / self.std3d

    def denormalize_3d(self, norm3d: np.ndarray) -> np.ndarray:
        return self._check(norm3d, self.mean3d) * self.std3d + self.mean3d

    @staticmethod
    def _check(x: np.ndarray, ref: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != ref.shape[0]:
            raise ShapeMismatch(f"expected {ref.shape[0]} coordinates, got {x.shape[-1]}")
        return x

    def ensure_fitted_on(self, records: Sequence) -> None:
        """
        Raises:
            LeakageError: the statistics were fitted on a different record set
        """
        fingerprint = split_fingerprint(records)
        if fingerprint != self.fitted_on:
            raise LeakageError(
                f"normalization stats were fitted on split {self.fitted_on or '<unknown>'}, "
                f"not on the training split {fingerprint}"
            )


def fit_norm_stats(train_records: Sequence) -> NormStats:
    """
    Fit mean/std per coordinate on the training split only.

    Raises:
        EmptySplit: no training records
    """
    train_records = list(train_records)
    if not train_records:
        raise EmptySplit("cannot fit normalization statistics on an empty split")
    flat2d = flatten_poses(np.stack([r.pose2d_det.joints for r in train_records]))
    flat3d = flatten_poses(np.stack([r.pose3d_cam.joints for r in train_records]))
    stats = NormStats(
        mean2d=flat2d.mean(axis=0),
        std2d=flat2d.std(axis=0),
        mean3d=flat3d.mean(axis=0),
        std3d=flat3d.std(axis=0),
        fitted_on=split_fingerprint(train_records),
    )
    logger.info(f"Fitted normalization stats on {len(train_records)} records (split {stats.fitted_on})")
    return stats
