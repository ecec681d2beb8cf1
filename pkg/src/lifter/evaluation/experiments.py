"""
Equivariance diagnostics, the embedding-rotation sweep and the
training-camera distance sweep.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..compute import Mode, RngStream
from ..data.augmentation import angular_distance, fit_ring_center, original_cameras
from ..data.normalization import NormStats
from ..data.protocols import H36M_TEST_SUBJECTS, H36M_TRAIN_SUBJECTS
from ..data.records import FrameRecord
from ..data.sampling import PairBatch, PairSampler
from ..errors import EmptySplit, UnknownCamera
from ..geometry import Rotation3, rot_vertical
from ..model import LiftingModel, encode, predict, rotate_embedding
from .metrics import per_frame_mpjpe
from .protocol import frame_errors, ground_truth

logger = logging.getLogger(__name__)

DEFAULT_ROTATION_ANGLES = [float(a) for a in range(-180, 181, 15)]
DEFAULT_SWEEP_DISTANCES = [7.5, 15.0, 30.0, 45.0, 60.0, 90.0]
SWEEP_VARIANTS = ("siamese", "baseline")

# train_fn(train_records, test_records, variant, seed, distance_deg) -> (model, stats)
SweepTrainFn = Callable[[List[FrameRecord], List[FrameRecord], str, int, float], Tuple[LiftingModel, NormStats]]


@dataclass
class EquivarianceStats:
    mean: float
    median: float
    mean_normalized: float
    median_normalized: float
    n_pairs: int


def equivariance_residuals(model: LiftingModel, batch: PairBatch) -> np.ndarray:
    """||R2 R1^T h1 - h2||_F per pair, inference mode"""
    h1 = encode(model, batch.inputs_a, Mode.INFER)
    h2 = encode(model, batch.inputs_b, Mode.INFER)
    diff = rotate_embedding(batch.siamese_targets.rel_rots, h1) - h2
    return np.sqrt(np.sum(diff * diff, axis=(1, 2)))


def equivariance_error(model: LiftingModel, pair_batches: Iterable[PairBatch]) -> EquivarianceStats:
    """Mean and median equivariance residual, raw and divided by its bound 2 sqrt(M)"""
    residuals = [equivariance_residuals(model, b) for b in pair_batches]
    values = np.concatenate(residuals) if residuals else np.zeros(0)
    if len(values) == 0:
        raise EmptySplit("no pairs to measure equivariance on")
    bound = 2.0 * np.sqrt(model.cfg.m)
    mean, median = float(values.mean()), float(np.median(values))
    return EquivarianceStats(mean, median, mean / bound, median / bound, int(len(values)))


def heldout_pair_batches(records: Sequence[FrameRecord], stats: NormStats, n_batches: int = 4,
                         batch_size: int = 256, seed: int = 0) -> List[PairBatch]:
    """Same-pose pairs drawn from records the statistics were not fitted on"""
    sampler = PairSampler(records, stats, check_leakage=False)
    rng = RngStream(seed).substream(0xE0)
    return [sampler.sample(batch_size, rng, i, same_pose_enabled=True) for i in range(n_batches)]


def _camera_rotation(cam_rot: np.ndarray, angle_deg: float) -> Rotation3:
    """Rotation about the world vertical axis, expressed in a camera frame"""
    return Rotation3(cam_rot @ rot_vertical(angle_deg).m @ cam_rot.T)


def embedding_rotation_experiment(model: LiftingModel, records: Sequence[FrameRecord],
                                  angles_deg: Sequence[float] = DEFAULT_ROTATION_ANGLES,
                                  stats: Optional[NormStats] = None, workers: int = 1) -> pd.DataFrame:
    """
    MPJPE of g(R f(p2d)) against R p3d for rotations R about the vertical
    axis, per angle. A zero angle takes the plain prediction path.
    """
    records = list(records)
    if not records:
        raise EmptySplit("no records for the embedding rotation experiment")
    gts = ground_truth(records)
    by_camera: Dict[str, List[int]] = defaultdict(list)
    for i, rec in enumerate(records):
        by_camera[rec.camera.id].append(i)

    rows = []
    for angle in angles_deg:
        if float(angle) % 360.0 == 0.0:
            errors = frame_errors(model, records, stats=stats, workers=workers)
        else:
            errors = np.empty(len(records))
            for idx in by_camera.values():
                group = [records[i] for i in idx]
                r = _camera_rotation(group[0].camera.rot.m, float(angle))
                preds = predict(model, np.stack([g.pose2d_det.joints for g in group]), stats,
                                embedding_rotation=r, workers=workers)
                errors[idx] = per_frame_mpjpe(preds, r.apply(gts[idx]))
        rows.append({
            "angle_deg": float(angle),
            "mpjpe_mm": float(np.mean(errors)),
            "median_mm": float(np.median(errors)),
        })
    table = pd.DataFrame(rows)
    zero = table.loc[table["angle_deg"] % 360.0 == 0.0, "median_mm"]
    table["median_ratio_to_zero"] = table["median_mm"] / float(zero.iloc[0]) if len(zero) else np.nan
    return table


def camera_azimuths(records: Sequence[FrameRecord],
                    ring_center: Optional[Tuple[float, float]] = None) -> Dict[str, float]:
    """Azimuth of every original camera about the ring centre"""
    cams = original_cameras(records)
    center = ring_center if ring_center is not None else fit_ring_center(cams)
    return {c.id: c.azimuth_deg(center) for c in cams}


def distance_split(dataset: Sequence[FrameRecord], distance_deg: float, test_camera: str,
                   azimuths: Dict[str, float], train_subjects: Sequence[int] = H36M_TRAIN_SUBJECTS,
                   test_subjects: Sequence[int] = H36M_TEST_SUBJECTS) -> Tuple[List[FrameRecord], List[FrameRecord]]:
    """
    Training side: train subjects seen from cameras at least distance_deg
    from the test camera (zero keeps every camera, the test one included).
    Test side: test subjects seen from the test camera.
    """
    if test_camera not in azimuths:
        raise UnknownCamera(f"test camera {test_camera!r} is not among {sorted(azimuths)}")
    t_az = azimuths[test_camera]
    train_set, test_set = set(train_subjects), set(test_subjects)
    train = [
        r for r in dataset
        if r.subject in train_set
        and (distance_deg <= 0 or angular_distance(azimuths[r.camera.id], t_az) >= distance_deg - 1e-9)
    ]
    test = [r for r in dataset if r.subject in test_set and r.camera.id == test_camera]
    if not train or not test:
        raise EmptySplit(f"distance {distance_deg} deg leaves {len(train)} train / {len(test)} test records")
    return train, test


def aug_distance_sweep(train_fn: SweepTrainFn, dataset: Sequence[FrameRecord],
                       distances_deg: Sequence[float] = DEFAULT_SWEEP_DISTANCES,
                       test_camera: str = "cam0", seeds: Sequence[int] = (0, 1, 2),
                       variants: Sequence[str] = SWEEP_VARIANTS,
                       ring_center: Optional[Tuple[float, float]] = None,
                       train_subjects: Sequence[int] = H36M_TRAIN_SUBJECTS,
                       test_subjects: Sequence[int] = H36M_TEST_SUBJECTS) -> pd.DataFrame:
    """
    Held-out-camera MPJPE as a function of how far the closest training
    camera sits from the test camera. One row per (distance, variant, seed);
    runs execute sequentially in that order.
    """
    azimuths = camera_azimuths(dataset, ring_center)
    rows = []
    for d in distances_deg:
        train, test = distance_split(dataset, float(d), test_camera, azimuths, train_subjects, test_subjects)
        for variant in variants:
            for seed in seeds:
                logger.info(f"Distance sweep: d={d} deg, variant={variant}, seed={seed}")
                model, stats = train_fn(train, test, variant, int(seed), float(d))
                errors = frame_errors(model, test, stats=stats)
                rows.append({
                    "distance_deg": float(d),
                    "variant": variant,
                    "seed": int(seed),
                    "mpjpe_mm": float(np.mean(errors)),
                })
    return pd.DataFrame(rows, columns=["distance_deg", "variant", "seed", "mpjpe_mm"])


def sweep_medians(table: pd.DataFrame) -> pd.DataFrame:
    """Median MPJPE over seeds, one column per variant"""
    return table.groupby(["distance_deg", "variant"])["mpjpe_mm"].median().unstack("variant")
