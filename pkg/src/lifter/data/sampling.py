"""
Siamese pair sampling.

Half of every batch pairs the same frame seen from two different cameras,
the other half pairs two independently drawn records. Odd batch sizes give
the extra pair to the random half.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..compute import RngStream
from ..errors import EmptySplit, InsufficientViews
from ..losses import DEFAULT_LAMBDA1, SiameseTargetBatch
from ..types import FrameKey, Matrix
from .normalization import NormStats, flatten_poses
from .records import FrameRecord

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class PairBatch:
    inputs_a: Matrix
    inputs_b: Matrix
    targets_a: Matrix
    targets_b: Matrix
    siamese_targets: SiameseTargetBatch
    same_pose_flags: np.ndarray
    indices_a: np.ndarray
    indices_b: np.ndarray

    def __len__(self) -> int:
        return len(self.inputs_a)

    @property
    def same_pose_count(self) -> int:
        return int(np.sum(self.same_pose_flags))


class PairSampler:
    """
    Precomputed normalized arrays and multi-view groups of a training split,
    so each batch is a handful of index draws.
    """

    def __init__(self, records: Sequence[FrameRecord], stats: NormStats,
                 lambda1: float = DEFAULT_LAMBDA1, check_leakage: bool = True):
        self.logger = logging.getLogger(__name__)
        records = list(records)
        if not records:
            raise EmptySplit("cannot sample pairs from an empty split")
        if check_leakage:
            stats.ensure_fitted_on(records)
        self.lambda1 = lambda1
        self.size = len(records)
        self.inputs = stats.normalize_2d(flatten_poses(np.stack([r.pose2d_det.joints for r in records])))
        poses_mm = np.stack([r.pose3d_cam.joints for r in records])
        self.targets = stats.normalize_3d(flatten_poses(poses_mm))
        self.poses_mm = poses_mm
        self.rotations = np.stack([r.camera.rot.m for r in records])

        groups: Dict[FrameKey, List[int]] = defaultdict(list)
        for i, rec in enumerate(records):
            groups[rec.key].append(i)
        self.groups = [np.array(g) for g in groups.values() if len({records[i].camera.id for i in g}) >= 2]
        self.logger.debug(f"Pair sampler: {self.size} records, {len(self.groups)} multi-view frames")

    def sample(self, batch_size: int, rng: RngStream, index: int = 0,
               same_pose_enabled: bool = True) -> PairBatch:
        """
        Raises:
            InsufficientViews: same-pose pairs requested but no frame has two cameras
        """
        if batch_size < 1:
            raise ValueError(f"batch size must be >= 1, got {batch_size}")
        gen = rng.substream(index).next()
        n_same = batch_size // 2 if same_pose_enabled else 0
        n_rand = batch_size - n_same
        if n_same and not self.groups:
            raise InsufficientViews("no frame is seen by two or more cameras")

        idx_a = np.empty(batch_size, dtype=np.int64)
        idx_b = np.empty(batch_size, dtype=np.int64)
        for k in range(n_same):
            group = self.groups[gen.integers(len(self.groups))]
            i, j = gen.choice(len(group), size=2, replace=False)
            idx_a[k], idx_b[k] = group[i], group[j]
        idx_a[n_same:] = gen.integers(self.size, size=n_rand)
        idx_b[n_same:] = gen.integers(self.size, size=n_rand)
        flags = np.zeros(batch_size, dtype=bool)
        flags[:n_same] = True
        return self.batch_from_indices(idx_a, idx_b, flags)

    def batch_from_indices(self, idx_a: np.ndarray, idx_b: np.ndarray,
                           flags: Optional[np.ndarray] = None) -> PairBatch:
        idx_a = np.asarray(idx_a, dtype=np.int64)
        idx_b = np.asarray(idx_b, dtype=np.int64)
        rel = np.matmul(self.rotations[idx_b], np.transpose(self.rotations[idx_a], (0, 2, 1)))
        diff = np.matmul(rel, self.poses_mm[idx_a]) - self.poses_mm[idx_b]
        dists = np.sqrt(np.sum(diff * diff, axis=(1, 2)))
        if flags is None:
            flags = np.zeros(len(idx_a), dtype=bool)
        return PairBatch(
            inputs_a=self.inputs[idx_a],
            inputs_b=self.inputs[idx_b],
            targets_a=self.targets[idx_a],
            targets_b=self.targets[idx_b],
            siamese_targets=SiameseTargetBatch(rel, dists, self.lambda1),
            same_pose_flags=flags,
            indices_a=idx_a,
            indices_b=idx_b,
        )


def sample_pairs(records: Sequence[FrameRecord], batch_size: int, rng: RngStream, index: int,
                 stats: NormStats, lambda1: float = DEFAULT_LAMBDA1,
                 same_pose_enabled: bool = True) -> PairBatch:
    """One-off convenience over PairSampler; training reuses a sampler instead"""
    return PairSampler(records, stats, lambda1).sample(batch_size, rng, index, same_pose_enabled)
