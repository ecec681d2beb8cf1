"""
Metrics, the protocol harness and the equivariance experiments.
"""

from .experiments import (
    EquivarianceStats,
    aug_distance_sweep,
    camera_azimuths,
    distance_split,
    embedding_rotation_experiment,
    equivariance_error,
    heldout_pair_batches,
    sweep_medians,
)
from .metrics import mpjpe, mpjpe_procrustes, per_frame_mpjpe
from .protocol import EvalReport, evaluate_records, frame_errors, run_protocol

__all__ = [
    "EquivarianceStats", "EvalReport", "aug_distance_sweep", "camera_azimuths", "distance_split",
    "embedding_rotation_experiment", "equivariance_error", "evaluate_records", "frame_errors",
    "heldout_pair_batches", "mpjpe", "mpjpe_procrustes", "per_frame_mpjpe", "run_protocol", "sweep_medians",
]
