"""
Rotation-equivariant 2D-to-3D human pose lifting.

A residual MLP encoder maps 2D joints to a 3 x M embedding of unit
vectors, a decoder lifts it to a hip-centered 3D pose, and a siamese loss
ties embeddings of the same scene seen from two cameras by the relative
camera rotation.
"""

from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .errors import LifterError
from .model import LiftingModel, ModelConfig, predict
from .trainer import TrainConfig, TrainLog, ablation_suite, prepare_data, resume, train

__version__ = "0.3.0"

__all__ = [
    "Checkpoint", "LifterError", "LiftingModel", "ModelConfig", "TrainConfig", "TrainLog",
    "ablation_suite", "load_checkpoint", "predict", "prepare_data", "resume", "save_checkpoint", "train",
]
