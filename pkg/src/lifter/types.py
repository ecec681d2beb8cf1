from typing import Any, Dict, Tuple

import numpy as np

# Type aliases used throughout the package

# Row-major float64 matrix, batch x features
Matrix = np.ndarray

# Batch of embeddings, batch x 3 x M
EmbeddingBatch = np.ndarray

# Identity of a frame across cameras: (subject, action, frame)
FrameKey = Tuple[int, str, int]

# Per-call cache produced by a layer forward pass
LayerCache = Dict[str, Any]

# Number of skeleton joints; joint 0 is the hip
N_JOINTS = 16
