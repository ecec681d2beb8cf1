"""
Dataset records, normalization, synthetic generation, augmentation,
protocol splits and pair sampling.
"""

from .augmentation import (
    AugmentationConfig,
    augment_cameras,
    fit_noise_sigmas,
    fit_ring_center,
    plan_ring,
    simulate_detector_noise,
)
from .normalization import NormStats, fit_norm_stats, flatten_poses, split_fingerprint, unflatten_poses
from .protocols import Protocol, split_protocol, subsample_10fps
from .records import FrameRecord, iter_dataset, read_dataset, write_dataset
from .sampling import PairBatch, PairSampler, sample_pairs
from .synthetic import SynthConfig, generate_synthetic, ring_cameras, skeleton_pose

__all__ = [
    "AugmentationConfig", "FrameRecord", "NormStats", "PairBatch", "PairSampler", "Protocol",
    "SynthConfig", "augment_cameras", "fit_noise_sigmas", "fit_norm_stats", "fit_ring_center",
    "flatten_poses", "generate_synthetic", "iter_dataset", "plan_ring", "read_dataset",
    "ring_cameras", "sample_pairs", "simulate_detector_noise", "skeleton_pose",
    "split_fingerprint", "split_protocol", "subsample_10fps", "unflatten_poses", "write_dataset",
]
