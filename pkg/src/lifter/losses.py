"""
Pose regression losses, the siamese equivariance loss and the total loss.

    l2       = mean_b || pred_b - target_b ||^2              (normalized coords)
    siamese  = mean_b ( || R_b h1_b - h2_b ||_F - lambda1 * d_b )^2
    total    = l2_a + l2_b + lambda2 * siamese

R_b = R2 R1^T is the relative camera rotation of pair b and d_b the
Frobenius distance of its two hip-centered poses in a common camera frame.
"""

import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .errors import MissingGroundTruth, ShapeMismatch
from .geometry import Rotation3, relative_rotation
from .types import EmbeddingBatch, Matrix

logger = logging.getLogger(__name__)

DEFAULT_LAMBDA1 = 0.01
DEFAULT_LAMBDA2 = 1.0


@dataclass(eq=False)
class SiameseTarget:
    rel_rot: Rotation3
    pose_dist: float
    lambda1: float = DEFAULT_LAMBDA1

    def __post_init__(self):
        if self.pose_dist < 0:
            raise ValueError(f"pose distance must be non-negative, got {self.pose_dist}")


@dataclass(eq=False)
class SiameseTargetBatch:
    """Stacked targets: rel_rots is batch x 3 x 3, pose_dists is batch"""

    rel_rots: np.ndarray
    pose_dists: np.ndarray
    lambda1: float = DEFAULT_LAMBDA1

    def __post_init__(self):
        self.rel_rots = np.asarray(self.rel_rots, dtype=np.float64).reshape(-1, 3, 3)
        self.pose_dists = np.asarray(self.pose_dists, dtype=np.float64).reshape(-1)
        if len(self.rel_rots) != len(self.pose_dists):
            raise ShapeMismatch("rotation and distance counts differ")
        if np.any(self.pose_dists < 0):
            raise ValueError("pose distances must be non-negative")

    def __len__(self) -> int:
        return len(self.pose_dists)

    def __getitem__(self, i: int) -> SiameseTarget:
        return SiameseTarget(Rotation3(self.rel_rots[i]), float(self.pose_dists[i]), self.lambda1)

    @classmethod
    def from_targets(cls, targets: Sequence[SiameseTarget]) -> "SiameseTargetBatch":
        if not targets:
            return cls(np.zeros((0, 3, 3)), np.zeros(0))
        return cls(
            np.stack([t.rel_rot.m for t in targets]),
            np.array([t.pose_dist for t in targets]),
            targets[0].lambda1,
        )

    def unreachable_count(self, m: int) -> int:
        """Pairs whose target lambda1 * d exceeds the largest possible embedding distance 2 sqrt(M)"""
        return int(np.sum(self.lambda1 * self.pose_dists > 2.0 * np.sqrt(m)))


def _check_pair(a: np.ndarray, b: np.ndarray, what: str) -> Tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeMismatch(f"{what}: shapes {a.shape} and {b.shape} differ")
    return a, b


def l2_pose_loss(pred: Matrix, target: Matrix) -> float:
    """Mean over the batch of the squared Euclidean error"""
    pred, target = _check_pair(pred, target, "l2 loss")
    if len(pred) == 0:
        return 0.0
    diff = pred - target
    return float(np.sum(diff * diff) / len(pred))


def l2_pose_loss_grad(pred: Matrix, target: Matrix) -> Matrix:
    pred, target = _check_pair(pred, target, "l2 loss")
    return 2.0 * (pred - target) / max(len(pred), 1)


def _siamese_residuals(h1: EmbeddingBatch, h2: EmbeddingBatch, targets: SiameseTargetBatch):
    h1, h2 = _check_pair(h1, h2, "siamese loss")
    if h1.ndim != 3 or h1.shape[1] != 3 or len(h1) != len(targets):
        raise ShapeMismatch(f"siamese loss expects {len(targets)} x 3 x M embeddings, got {h1.shape}")
    diff = np.matmul(targets.rel_rots, h1) - h2
    dist = np.sqrt(np.sum(diff * diff, axis=(1, 2)))
    residual = dist - targets.lambda1 * targets.pose_dists
    return diff, dist, residual


def siamese_loss(h1: EmbeddingBatch, h2: EmbeddingBatch, targets: SiameseTargetBatch) -> float:
    """mean over pairs of (||R h1 - h2||_F - lambda1 * pose_dist)^2"""
    _, _, residual = _siamese_residuals(h1, h2, targets)
    if len(residual) == 0:
        return 0.0
    return float(np.mean(residual ** 2))


def siamese_loss_grad(h1: EmbeddingBatch, h2: EmbeddingBatch,
                      targets: SiameseTargetBatch) -> Tuple[EmbeddingBatch, EmbeddingBatch]:
    """Gradients of siamese_loss with respect to h1 and h2 (zero where R h1 = h2)"""
    diff, dist, residual = _siamese_residuals(h1, h2, targets)
    n = max(len(residual), 1)
    safe = np.where(dist > 0, dist, 1.0)
    coef = np.where(dist > 0, 2.0 * residual / (n * safe), 0.0)
    d_diff = coef[:, None, None] * diff
    dh1 = np.matmul(np.transpose(targets.rel_rots, (0, 2, 1)), d_diff)
    return dh1, -d_diff


def total_loss(l2_a: float, l2_b: float, l_s: float, lambda2: float = DEFAULT_LAMBDA2) -> float:
    return l2_a + l2_b + lambda2 * l_s


def build_siamese_targets(pairs: Sequence[Tuple[object, object]],
                          lambda1: float = DEFAULT_LAMBDA1) -> SiameseTargetBatch:
    """
    Relative rotations and common-frame pose distances for record pairs.

    Pose 1 is rotated into the camera-2 frame before differencing; by
    orthonormality the distance does not depend on the frame chosen.

    Raises:
        MissingGroundTruth: a record has no camera-frame 3D pose
    """
    rel_rots = np.zeros((len(pairs), 3, 3))
    dists = np.zeros(len(pairs))
    for i, (rec1, rec2) in enumerate(pairs):
        for rec in (rec1, rec2):
            if getattr(rec, "pose3d_cam", None) is None:
                raise MissingGroundTruth(
                    f"record {rec.subject}/{rec.action}/{rec.frame} has no 3D ground truth"
                )
        r = relative_rotation(rec1.camera, rec2.camera)
        rel_rots[i] = r.m
        dists[i] = np.linalg.norm(r.m @ rec1.pose3d_cam.joints - rec2.pose3d_cam.joints)
    return SiameseTargetBatch(rel_rots, dists, lambda1)
