"""
The lifting network: encoder f, rotation-equivariant embedding, decoder g
and the weight-shared siamese wrapper.

    f: dense(2n -> H) -> residual block -> dense(H -> 3M) -> reshape 3 x M
       -> unit-normalize every 3-vector column
    g: flatten -> dense(3M -> H) -> residual block -> dense(H -> 3n)

Both siamese branches run through the same layer objects, so their
gradients accumulate into one parameter set.
"""

import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Dict, List, NamedTuple, Optional

import numpy as np

from .compute import BatchNormState, Dense, Mode, Param, ResidualBlock, ResidualConfig, RngStream
from .data.normalization import NormStats, flatten_poses, unflatten_poses
from .errors import ShapeMismatch, StatsMissing
from .geometry import Rotation3
from .types import EmbeddingBatch, LayerCache, Matrix, N_JOINTS

PREDICT_CHUNK = 1024


@dataclass
class EmbeddingConfig:
    m: int = 128
    norm_epsilon: float = 1e-8

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"embedding size must be >= 1, got {self.m}")
        if self.norm_epsilon <= 0:
            raise ValueError("embedding norm epsilon must be positive")


@dataclass
class ModelConfig:
    n_joints: int = N_JOINTS
    hidden: int = 1024
    m: int = 128
    dropout: float = 0.2
    leaky_slope: float = 0.01
    bn_epsilon: float = 1e-5
    bn_momentum: float = 0.1
    norm_epsilon: float = 1e-8

    @property
    def embedding(self) -> EmbeddingConfig:
        return EmbeddingConfig(self.m, self.norm_epsilon)

    def arch_vector(self) -> List[float]:
        """Architecture fingerprint stored in checkpoints"""
        return [float(v) for v in asdict(self).values()]

    @classmethod
    def from_arch_vector(cls, values) -> "ModelConfig":
        names = list(cls.__dataclass_fields__)
        if len(values) != len(names):
            raise ShapeMismatch(f"architecture vector has {len(values)} entries, expected {len(names)}")
        kwargs = dict(zip(names, values))
        for key in ("n_joints", "hidden", "m"):
            kwargs[key] = int(kwargs[key])
        return cls(**kwargs)


class SiameseOutput(NamedTuple):
    h1: EmbeddingBatch
    h2: EmbeddingBatch
    pred1: Matrix
    pred2: Matrix
    caches: Dict[str, LayerCache]


class LiftingModel:
    """All learnable parameters of f and g plus batchnorm running statistics"""

    def __init__(self, cfg: ModelConfig = None, seed: int = 0, stats: Optional[NormStats] = None):
        self.cfg = cfg or ModelConfig()
        self.stats = stats
        self.logger = logging.getLogger(__name__)
        c = self.cfg
        self.embedding = c.embedding
        gen = np.random.default_rng([int(seed), 0x5EED])
        block_cfg = ResidualConfig(c.hidden, c.dropout, c.leaky_slope, c.bn_epsilon, c.bn_momentum)

        self.enc_in = Dense(2 * c.n_joints, c.hidden, "enc.dense_in", gen, c.leaky_slope)
        self.enc_block = ResidualBlock(block_cfg, "enc.block", gen)
        self.enc_embed = Dense(c.hidden, 3 * c.m, "enc.dense_embed", gen, c.leaky_slope)
        self.dec_in = Dense(3 * c.m, c.hidden, "dec.dense_in", gen, c.leaky_slope)
        self.dec_block = ResidualBlock(block_cfg, "dec.block", gen)
        self.dec_out = Dense(c.hidden, 3 * c.n_joints, "dec.dense_out", gen, c.leaky_slope)

        self.logger.debug(f"Lifting model built: hidden={c.hidden}, M={c.m}, "
                          f"{sum(p.value.size for p in self.params())} parameters")

    # Parameter access

    def params(self) -> List[Param]:
        return (self.enc_in.params() + self.enc_block.params() + self.enc_embed.params()
                + self.dec_in.params() + self.dec_block.params() + self.dec_out.params())

    def batchnorms(self) -> List[BatchNormState]:
        return self.enc_block.batchnorms() + self.dec_block.batchnorms()

    def zero_grad(self) -> None:
        for p in self.params():
            p.zero_grad()

    def snapshot(self) -> Dict[str, np.ndarray]:
        """Copies of every parameter value and running statistic"""
        state = {p.name: p.value.copy() for p in self.params()}
        for bn in self.batchnorms():
            state[f"{bn.name}.running_mean"] = bn.running_mean.copy()
            state[f"{bn.name}.running_var"] = bn.running_var.copy()
        return state

    def fingerprint(self) -> str:
        """Short digest of every parameter and running statistic"""
        digest = hashlib.sha256()
        for name, value in self.snapshot().items():
            digest.update(name.encode("utf-8"))
            digest.update(np.ascontiguousarray(value, dtype="<f8").tobytes())
        return digest.hexdigest()[:16]

    def restore(self, state: Dict[str, np.ndarray]) -> None:
        for p in self.params():
            _assign(p.value, state[p.name], p.name)
        for bn in self.batchnorms():
            _assign(bn.running_mean, state[f"{bn.name}.running_mean"], bn.name)
            _assign(bn.running_var, state[f"{bn.name}.running_var"], bn.name)

    # Encoder

    def encoder_forward(self, x: Matrix, mode: Mode, rng: Optional[RngStream]):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != 2 * self.cfg.n_joints:
            raise ShapeMismatch(f"encoder expects batch x {2 * self.cfg.n_joints}, got {x.shape}")
        out, c_in = self.enc_in.forward(x)
        out, c_block = self.enc_block.forward(out, mode, rng)
        z, c_embed = self.enc_embed.forward(out)
        z = z.reshape(len(z), 3, self.cfg.m)
        scale = np.sqrt(np.sum(z * z, axis=1, keepdims=True) + self.cfg.norm_epsilon)
        h = z / scale
        return h, {"in": c_in, "block": c_block, "embed": c_embed, "h": h, "scale": scale}

    def encoder_backward(self, cache: LayerCache, dh: EmbeddingBatch) -> Matrix:
        h, scale = cache["h"], cache["scale"]
        if dh.shape != h.shape:
            raise ShapeMismatch(f"embedding gradient {dh.shape} does not match {h.shape}")
        dz = (dh - h * np.sum(dh * h, axis=1, keepdims=True)) / scale
        grad = self.enc_embed.backward(cache["embed"], dz.reshape(len(dz), -1))
        grad = self.enc_block.backward(cache["block"], grad)
        return self.enc_in.backward(cache["in"], grad)

    # Decoder

    def decoder_forward(self, h: EmbeddingBatch, mode: Mode, rng: Optional[RngStream]):
        h = np.asarray(h, dtype=np.float64)
        if h.ndim != 3 or h.shape[1:] != (3, self.cfg.m):
            raise ShapeMismatch(f"decoder expects batch x 3 x {self.cfg.m}, got {h.shape}")
        out, c_in = self.dec_in.forward(h.reshape(len(h), -1))
        out, c_block = self.dec_block.forward(out, mode, rng)
        out, c_out = self.dec_out.forward(out)
        return out, {"in": c_in, "block": c_block, "out": c_out}

    def decoder_backward(self, cache: LayerCache, dpred: Matrix) -> EmbeddingBatch:
        grad = self.dec_out.backward(cache["out"], dpred)
        grad = self.dec_block.backward(cache["block"], grad)
        grad = self.dec_in.backward(cache["in"], grad)
        return grad.reshape(len(grad), 3, self.cfg.m)


def _assign(target: np.ndarray, value: np.ndarray, name: str) -> None:
    value = np.asarray(value, dtype=np.float64)
    if value.shape != target.shape:
        raise ShapeMismatch(f"{name}: stored shape {value.shape} != model shape {target.shape}")
    target[...] = value


def encode(model: LiftingModel, p2d_norm: Matrix, mode: Mode = Mode.INFER,
           rng: Optional[RngStream] = None) -> EmbeddingBatch:
    """Normalized 2D inputs (batch x 2n) -> unit-column embeddings (batch x 3 x M)"""
    return model.encoder_forward(p2d_norm, mode, rng)[0]


def decode(model: LiftingModel, h: EmbeddingBatch, mode: Mode = Mode.INFER,
           rng: Optional[RngStream] = None) -> Matrix:
    """Embeddings (batch x 3 x M) -> normalized 3D poses (batch x 3n)"""
    return model.decoder_forward(h, mode, rng)[0]


def forward_siamese(model: LiftingModel, pair_batch, mode: Mode,
                    rng: Optional[RngStream]) -> SiameseOutput:
    """Run both branches of a pair batch through the shared parameters"""
    xa = np.asarray(pair_batch.inputs_a, dtype=np.float64)
    xb = np.asarray(pair_batch.inputs_b, dtype=np.float64)
    if xa.shape != xb.shape:
        raise ShapeMismatch(f"branch inputs differ in shape: {xa.shape} vs {xb.shape}")
    h1, c_enc1 = model.encoder_forward(xa, mode, rng)
    pred1, c_dec1 = model.decoder_forward(h1, mode, rng)
    h2, c_enc2 = model.encoder_forward(xb, mode, rng)
    pred2, c_dec2 = model.decoder_forward(h2, mode, rng)
    caches = {"enc1": c_enc1, "dec1": c_dec1, "enc2": c_enc2, "dec2": c_dec2}
    return SiameseOutput(h1, h2, pred1, pred2, caches)


def backward_siamese(model: LiftingModel, out: SiameseOutput, dh1: EmbeddingBatch, dh2: EmbeddingBatch,
                     dpred1: Matrix, dpred2: Matrix) -> None:
    """Accumulate the gradients of both branches into the shared parameters"""
    c = out.caches
    model.encoder_backward(c["enc1"], dh1 + model.decoder_backward(c["dec1"], dpred1))
    model.encoder_backward(c["enc2"], dh2 + model.decoder_backward(c["dec2"], dpred2))


def rotate_embedding(r: Rotation3, h: EmbeddingBatch) -> EmbeddingBatch:
    """Left-multiply every 3 x M embedding by the rotation"""
    m = r.m if isinstance(r, Rotation3) else np.asarray(r, dtype=np.float64)
    return np.matmul(m, np.asarray(h, dtype=np.float64))


def predict(model: LiftingModel, p2d_raw: np.ndarray, stats: Optional[NormStats] = None,
            embedding_rotation: Optional[Rotation3] = None, workers: int = 1) -> np.ndarray:
    """
    Lift raw 2D detections (batch x 2 x n, pixels) to hip-centered 3D poses
    (batch x 3 x n, millimetres) with one branch in inference mode.

    An optional rotation is applied to the embedding before decoding.
    Inputs are processed in fixed chunks of PREDICT_CHUNK frames; with
    workers > 1 the chunks run on a thread pool, with identical results.

    Raises:
        StatsMissing: no normalization statistics supplied or attached
    """
    stats = stats if stats is not None else model.stats
    if stats is None:
        raise StatsMissing("prediction needs fitted normalization statistics")
    p2d_raw = np.asarray(p2d_raw, dtype=np.float64)
    if p2d_raw.ndim == 2:
        p2d_raw = p2d_raw[None]
    x = stats.normalize_2d(flatten_poses(p2d_raw))

    def run_chunk(start: int) -> Matrix:
        h = encode(model, x[start:start + PREDICT_CHUNK])
        if embedding_rotation is not None:
            h = rotate_embedding(embedding_rotation, h)
        return decode(model, h)

    starts = range(0, len(x), PREDICT_CHUNK)
    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(run_chunk, starts))
    else:
        outputs = [run_chunk(s) for s in starts]
    if not outputs:
        return np.zeros((0, 3, model.cfg.n_joints))
    flat = stats.denormalize_3d(np.concatenate(outputs))
    return unflatten_poses(flat, 3, model.cfg.n_joints)
