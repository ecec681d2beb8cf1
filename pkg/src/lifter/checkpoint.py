"""
EQLF checkpoint files.

Layout (all integers little-endian):

    b"EQLF"                      magic
    u32                          format version
    u32                          tensor count
    per tensor, sorted by name:
        u16                      name length in bytes
        bytes                    UTF-8 name
        u8                       rank
        u32 * rank               dimensions
        f64 * prod(dimensions)   values, row-major
    u32                          CRC32 of every preceding byte

Tensor namespaces: param/, adam_m/, adam_v/, bn/, stats/, train/, meta/.
Hashes and seeds are stored as pairs of 32-bit words so they survive the
f64 value encoding exactly.
"""

import logging
import struct
import zlib
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .compute import Adam
from .data.normalization import NormStats
from .errors import ChecksumError, DiskError, SchemaMismatch, StorageError
from .model import LiftingModel, ModelConfig
from .utils import atomic_write_bytes

logger = logging.getLogger(__name__)

MAGIC = b"EQLF"
FORMAT_VERSION = 1
MAX_NAME_BYTES = 0xFFFF


def encode_tensors(tensors: Dict[str, np.ndarray]) -> bytes:
    parts = [MAGIC, struct.pack("<II", FORMAT_VERSION, len(tensors))]
    for name in sorted(tensors):
        value = np.asarray(tensors[name], dtype="<f8")
        raw_name = name.encode("utf-8")
        if len(raw_name) > MAX_NAME_BYTES:
            raise StorageError(f"tensor name too long: {name[:40]}...")
        if value.ndim > 255:
            raise StorageError(f"tensor {name} has rank {value.ndim}")
        parts.append(struct.pack("<H", len(raw_name)))
        parts.append(raw_name)
        parts.append(struct.pack("<B", value.ndim))
        parts.append(struct.pack(f"<{value.ndim}I", *value.shape))
        parts.append(np.ascontiguousarray(value).tobytes())
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF)


class _Reader:
    def __init__(self, payload: bytes):
        self.payload = payload
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.payload):
            raise StorageError("checkpoint is truncated")
        chunk = self.payload[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str) -> Tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def decode_tensors(payload: bytes) -> Dict[str, np.ndarray]:
    """
    Raises:
        ChecksumError: trailing CRC does not match
        StorageError: bad magic, unsupported version or malformed body
    """
    if len(payload) < len(MAGIC) + 12:
        raise StorageError("checkpoint is too short")
    body, (stored_crc,) = payload[:-4], struct.unpack("<I", payload[-4:])
    actual_crc = zlib.crc32(body) & 0xFFFFFFFF
    if actual_crc != stored_crc:
        raise ChecksumError(f"checkpoint CRC mismatch: stored {stored_crc:08x}, computed {actual_crc:08x}")
    reader = _Reader(body)
    if reader.take(4) != MAGIC:
        raise StorageError("not an EQLF checkpoint")
    version, count = reader.unpack("<II")
    if version != FORMAT_VERSION:
        raise StorageError(f"checkpoint format version {version}, supported {FORMAT_VERSION}")
    tensors: Dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = reader.unpack("<H")
        name = reader.take(name_len).decode("utf-8")
        (rank,) = reader.unpack("<B")
        dims = reader.unpack(f"<{rank}I") if rank else ()
        size = int(np.prod(dims)) if rank else 1
        values = np.frombuffer(reader.take(8 * size), dtype="<f8").astype(np.float64)
        tensors[name] = values.reshape(dims)
    if reader.pos != len(body):
        raise StorageError(f"{len(body) - reader.pos} trailing bytes after the last tensor")
    return tensors


def save_tensors(path: str, tensors: Dict[str, np.ndarray]) -> None:
    atomic_write_bytes(path, encode_tensors(tensors))


def load_tensors(path: str) -> Dict[str, np.ndarray]:
    try:
        with open(path, "rb") as f:
            payload = f.read()
    except OSError as e:
        raise DiskError(f"cannot read checkpoint {path}: {e}") from e
    return decode_tensors(payload)


def hex_to_words(text: str) -> np.ndarray:
    """Hex digest (up to 16 chars) as two 32-bit words"""
    if not text:
        return np.zeros(0)
    value = int(text, 16)
    return np.array([float(value >> 32), float(value & 0xFFFFFFFF)])


def words_to_hex(words: np.ndarray) -> str:
    words = np.asarray(words).reshape(-1)
    if words.size == 0:
        return ""
    return f"{(int(words[0]) << 32) | int(words[1]):016x}"


def int_to_words(value: int) -> np.ndarray:
    value = int(value) & ((1 << 64) - 1)
    return np.array([float(value >> 32), float(value & 0xFFFFFFFF)])


def words_to_int(words: np.ndarray) -> int:
    words = np.asarray(words).reshape(-1)
    return (int(words[0]) << 32) | int(words[1])


@dataclass
class Checkpoint:
    """Everything needed to rebuild a model and continue training"""

    model_cfg: ModelConfig
    model_state: Dict[str, np.ndarray]
    stats: Optional[NormStats] = None
    adam_m: Dict[str, np.ndarray] = field(default_factory=dict)
    adam_v: Dict[str, np.ndarray] = field(default_factory=dict)
    adam_step: int = 0
    epoch: int = 0
    best_mpjpe: float = float("inf")
    best_epoch: int = -1
    log_matrix: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    config_hash: str = ""
    seed: int = 0

    @classmethod
    def capture(cls, model: LiftingModel, optimizer: Optional[Adam] = None, epoch: int = 0,
                best_mpjpe: float = float("inf"), best_epoch: int = -1,
                log_matrix: Optional[np.ndarray] = None, config_hash: str = "", seed: int = 0) -> "Checkpoint":
        params = model.params()
        return cls(
            model_cfg=model.cfg,
            model_state=model.snapshot(),
            stats=model.stats,
            adam_m={p.name: p.adam_m.copy() for p in params},
            adam_v={p.name: p.adam_v.copy() for p in params},
            adam_step=optimizer.t if optimizer is not None else 0,
            epoch=epoch,
            best_mpjpe=best_mpjpe,
            best_epoch=best_epoch,
            log_matrix=np.zeros((0, 0)) if log_matrix is None else np.asarray(log_matrix, dtype=np.float64),
            config_hash=config_hash,
            seed=seed,
        )

    def to_tensors(self) -> Dict[str, np.ndarray]:
        tensors: Dict[str, np.ndarray] = {
            "meta/arch": np.array(self.model_cfg.arch_vector()),
            "meta/config_hash": hex_to_words(self.config_hash),
            "meta/seed": int_to_words(self.seed),
            "train/epoch": np.array([float(self.epoch)]),
            "train/adam_step": np.array([float(self.adam_step)]),
            "train/best_mpjpe": np.array([self.best_mpjpe]),
            "train/best_epoch": np.array([float(self.best_epoch)]),
            "train/log": self.log_matrix,
        }
        for name, value in self.model_state.items():
            prefix = "bn/" if name.endswith((".running_mean", ".running_var")) else "param/"
            tensors[prefix + name] = value
        for name, value in self.adam_m.items():
            tensors["adam_m/" + name] = value
        for name, value in self.adam_v.items():
            tensors["adam_v/" + name] = value
        if self.stats is not None:
            tensors["stats/mean2d"] = self.stats.mean2d
            tensors["stats/std2d"] = self.stats.std2d
            tensors["stats/mean3d"] = self.stats.mean3d
            tensors["stats/std3d"] = self.stats.std3d
            tensors["stats/fitted_on"] = hex_to_words(self.stats.fitted_on)
        return tensors

    @classmethod
    def from_tensors(cls, tensors: Dict[str, np.ndarray]) -> "Checkpoint":
        try:
            model_cfg = ModelConfig.from_arch_vector(tensors["meta/arch"].tolist())
            state = {}
            adam_m, adam_v = {}, {}
            for name, value in tensors.items():
                ns, _, key = name.partition("/")
                if ns in ("param", "bn"):
                    state[key] = value
                elif ns == "adam_m":
                    adam_m[key] = value
                elif ns == "adam_v":
                    adam_v[key] = value
            stats = None
            if "stats/mean2d" in tensors:
                stats = NormStats(tensors["stats/mean2d"], tensors["stats/std2d"], tensors["stats/mean3d"],
                                  tensors["stats/std3d"], words_to_hex(tensors["stats/fitted_on"]))
            return cls(
                model_cfg=model_cfg,
                model_state=state,
                stats=stats,
                adam_m=adam_m,
                adam_v=adam_v,
                adam_step=int(tensors["train/adam_step"][0]),
                epoch=int(tensors["train/epoch"][0]),
                best_mpjpe=float(tensors["train/best_mpjpe"][0]),
                best_epoch=int(tensors["train/best_epoch"][0]),
                log_matrix=tensors["train/log"],
                config_hash=words_to_hex(tensors["meta/config_hash"]),
                seed=words_to_int(tensors["meta/seed"]),
            )
        except KeyError as e:
            raise StorageError(f"checkpoint lacks tensor {e}") from e

    def check_architecture(self, expected: ModelConfig) -> None:
        """
        Raises:
            SchemaMismatch: the stored architecture differs from `expected`
        """
        if self.model_cfg.arch_vector() != expected.arch_vector():
            diffs: List[str] = [
                f"{k}: checkpoint {a} vs config {b}"
                for k, a, b in zip(ModelConfig.__dataclass_fields__, self.model_cfg.arch_vector(),
                                   expected.arch_vector()) if a != b
            ]
            raise SchemaMismatch("checkpoint architecture differs: " + "; ".join(diffs))

    def build_model(self) -> LiftingModel:
        model = LiftingModel(self.model_cfg, seed=0, stats=self.stats)
        model.restore(self.model_state)
        return model

    def restore_optimizer(self, model: LiftingModel, optimizer: Adam) -> None:
        for p in model.params():
            if p.name in self.adam_m:
                p.adam_m[...] = self.adam_m[p.name]
                p.adam_v[...] = self.adam_v[p.name]
        optimizer.t = self.adam_step


def save_checkpoint(path: str, checkpoint: Checkpoint) -> None:
    save_tensors(path, checkpoint.to_tensors())
    logger.info(f"Saved checkpoint {path} (epoch {checkpoint.epoch})")


def load_checkpoint(path: str) -> Checkpoint:
    checkpoint = Checkpoint.from_tensors(load_tensors(path))
    logger.info(f"Loaded checkpoint {path} (epoch {checkpoint.epoch}, config {checkpoint.config_hash})")
    return checkpoint
