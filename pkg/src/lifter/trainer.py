"""
Training loop: data preparation, siamese steps, per-epoch evaluation,
checkpointing, resume and the ablation studies built on top of them.

Randomness is keyed, never shared:

    model init        seed
    augmentation      root.substream(AUGMENT_KEY)
    pair batches      root.substream(SAMPLING_KEY).substream(epoch), index = step
    dropout masks     root.substream(epoch, step, DROPOUT_KEY)

so a run resumed at an epoch boundary replays exactly what an
uninterrupted run would have done.
"""

import io
import logging
import math
import os
import time
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .compute import Adam, AdamConfig, Mode, RngStream
from .data.augmentation import AugmentationConfig, augment_cameras, original_cameras, resolve_cameras
from .data.normalization import NormStats, fit_norm_stats
from .data.protocols import H36M_TEST_SUBJECTS, H36M_TRAIN_SUBJECTS, Protocol, split_protocol, subsample_10fps
from .data.records import FrameRecord
from .data.sampling import PairBatch, PairSampler
from .errors import ConfigInvalid, NonFiniteLoss
from .evaluation.experiments import SWEEP_VARIANTS, SweepTrainFn
from .evaluation.protocol import frame_errors
from .losses import (
    DEFAULT_LAMBDA1,
    DEFAULT_LAMBDA2,
    l2_pose_loss,
    l2_pose_loss_grad,
    siamese_loss,
    siamese_loss_grad,
    total_loss,
)
from .model import LiftingModel, ModelConfig, backward_siamese, forward_siamese
from .types import N_JOINTS
from .utils import atomic_write_text, short_hash, worker_count

logger = logging.getLogger(__name__)

AUGMENT_KEY = 0xA0
SAMPLING_KEY = 0xDA7A
DROPOUT_KEY = 0xD0

BEST_CHECKPOINT = "best.eqlf"
FINAL_CHECKPOINT = "final.eqlf"
LOG_FILE = "train_log.csv"

LOG_COLUMNS = ["epoch", "l2_a", "l2_b", "siamese", "total", "test_mpjpe", "lr", "wall_time"]


@dataclass
class TrainConfig:
    epochs: int = 100
    batch_size: int = 256
    lr0: float = 0.001
    decay: float = 0.96
    dropout: float = 0.2
    lambda1: float = DEFAULT_LAMBDA1
    lambda2: float = DEFAULT_LAMBDA2
    m: int = 128
    hidden: int = 1024
    leaky_slope: float = 0.01
    seed: int = 0
    siamese_enabled: bool = True
    same_pose_enabled: bool = True
    augmentation: AugmentationConfig = field(default_factory=AugmentationConfig)
    protocol: int = 3
    test_camera: Optional[str] = "cam0"
    train_subjects: Tuple[int, ...] = H36M_TRAIN_SUBJECTS
    test_subjects: Tuple[int, ...] = H36M_TEST_SUBJECTS
    source_fps: float = 10.0
    workers: int = 0
    prefetch: int = 4
    eval_max_frames: int = 0
    out_dir: Optional[str] = None
    config_hash: str = ""
    include_timing: bool = False

    def __post_init__(self):
        if isinstance(self.augmentation, dict):
            self.augmentation = AugmentationConfig.from_dict(self.augmentation)
        self.train_subjects = tuple(int(s) for s in self.train_subjects)
        self.test_subjects = tuple(int(s) for s in self.test_subjects)
        self.protocol = int(Protocol.parse(self.protocol))
        if self.epochs < 0:
            raise ConfigInvalid(f"train.epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 2:
            raise ConfigInvalid(f"train.batch_size must be >= 2 for batchnorm, got {self.batch_size}")
        for name in ("lr0", "decay", "m", "hidden", "prefetch"):
            if getattr(self, name) <= 0:
                raise ConfigInvalid(f"train.{name} must be positive, got {getattr(self, name)}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigInvalid(f"model.dropout must be in [0, 1), got {self.dropout}")
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ConfigInvalid("lambda1 and lambda2 must be non-negative")
        if self.leaky_slope < 0:
            raise ConfigInvalid(f"model.leaky_slope must be >= 0, got {self.leaky_slope}")
        if self.eval_max_frames < 0:
            raise ConfigInvalid("eval.max_frames must be >= 0")

    @property
    def effective_lambda2(self) -> float:
        return self.lambda2 if self.siamese_enabled else 0.0

    @property
    def uses_same_pose(self) -> bool:
        return self.siamese_enabled and self.same_pose_enabled

    def model_config(self) -> ModelConfig:
        return ModelConfig(n_joints=N_JOINTS, hidden=self.hidden, m=self.m, dropout=self.dropout,
                           leaky_slope=self.leaky_slope)

    def adam_config(self) -> AdamConfig:
        return AdamConfig(lr0=self.lr0, decay=self.decay)

    def variant_hash(self) -> str:
        """Hash of everything that shapes the trained model, seed and output location excluded"""
        data = asdict(self)
        for key in ("seed", "out_dir", "config_hash", "include_timing", "workers", "prefetch"):
            data.pop(key)
        return short_hash(data)

    def with_overrides(self, overrides: Dict[str, Any]) -> "TrainConfig":
        """Copy with top-level fields replaced; an `augmentation` dict updates that section"""
        overrides = dict(overrides)
        aug = overrides.pop("augmentation", None)
        cfg = replace(self, **overrides)
        if aug:
            cfg.augmentation = replace(cfg.augmentation, **aug)
        return cfg

    @classmethod
    def from_run_config(cls, run: Dict[str, Any], config_hash: str = "") -> "TrainConfig":
        """Collect the training fields from a resolved run configuration"""
        model, train, ev = run["model"], run["train"], run["eval"]
        names = {f.name for f in fields(cls)}
        kwargs = {k: v for k, v in {**model, **train}.items() if k in names}
        kwargs.update(
            augmentation=AugmentationConfig.from_dict(run["augmentation"]),
            protocol=ev["protocol"],
            test_camera=ev["test_camera"],
            train_subjects=ev["train_subjects"],
            test_subjects=ev["test_subjects"],
            eval_max_frames=ev["max_frames"],
            source_fps=run["data"]["source_fps"],
            out_dir=run["output"]["dir"],
            include_timing=run["output"]["include_timing"],
            config_hash=config_hash,
        )
        return cls(**kwargs)


@dataclass
class TrainLog:
    """Per-epoch loss components, test MPJPE, learning rate and wall time"""

    rows: List[Dict[str, float]] = field(default_factory=list)
    config_hash: str = ""
    seed: int = 0

    def __len__(self) -> int:
        return len(self.rows)

    def append(self, **row: float) -> None:
        epoch = int(row["epoch"])
        if self.rows and epoch <= self.rows[-1]["epoch"]:
            raise ValueError(f"epoch {epoch} does not follow {self.rows[-1]['epoch']}")
        values = {c: float(row.get(c, 0.0)) for c in LOG_COLUMNS}
        bad = [c for c, v in values.items() if not math.isfinite(v)]
        if bad:
            raise NonFiniteLoss(f"non-finite training log values {bad} at epoch {epoch}")
        values["epoch"] = epoch
        self.rows.append(values)

    def frame(self, include_timing: bool = True) -> pd.DataFrame:
        table = pd.DataFrame(self.rows, columns=LOG_COLUMNS)
        table["epoch"] = table["epoch"].astype(int)
        if not include_timing:
            table = table.drop(columns=["wall_time"])
        return table

    def to_csv(self, include_timing: bool = False) -> str:
        buffer = io.StringIO()
        buffer.write(f"# config_hash={self.config_hash} seed={self.seed}\n")
        self.frame(include_timing).to_csv(buffer, index=False, float_format="%.10g", lineterminator="\n")
        return buffer.getvalue()

    def save_csv(self, path: str, include_timing: bool = False) -> None:
        atomic_write_text(path, self.to_csv(include_timing))

    @classmethod
    def read_csv(cls, path: str) -> "TrainLog":
        with open(path, "r") as f:
            header = f.readline().lstrip("# ").split()
        meta = dict(item.split("=", 1) for item in header if "=" in item)
        table = pd.read_csv(path, comment="#")
        log = cls(config_hash=meta.get("config_hash", ""), seed=int(meta.get("seed", 0)))
        for row in table.to_dict("records"):
            log.append(**row)
        return log

    def to_matrix(self, include_timing: bool = False) -> np.ndarray:
        """epochs x len(LOG_COLUMNS); wall time zeroed unless timing is included"""
        if not self.rows:
            return np.zeros((0, len(LOG_COLUMNS)))
        matrix = self.frame(include_timing=True).to_numpy(dtype=np.float64)
        if not include_timing:
            matrix[:, LOG_COLUMNS.index("wall_time")] = 0.0
        return matrix

    @classmethod
    def from_matrix(cls, matrix: np.ndarray, config_hash: str = "", seed: int = 0) -> "TrainLog":
        log = cls(config_hash=config_hash, seed=seed)
        for values in np.asarray(matrix).reshape(-1, len(LOG_COLUMNS)):
            log.append(**dict(zip(LOG_COLUMNS, values.tolist())))
        return log


@dataclass
class StepLosses:
    l2_a: float
    l2_b: float
    siamese: float
    total: float
    lr: float


@dataclass
class PreparedData:
    """Training records (augmented), test records and the statistics fitted on training"""

    train: List[FrameRecord]
    test: List[FrameRecord]
    stats: NormStats


def _eval_subset(records: Sequence[FrameRecord], max_frames: int) -> List[FrameRecord]:
    records = list(records)
    if max_frames <= 0 or len(records) <= max_frames:
        return records
    picks = np.linspace(0, len(records) - 1, max_frames).round().astype(int)
    return [records[i] for i in picks]


def augment_training_side(cfg: TrainConfig, train: Sequence[FrameRecord],
                          test_cameras: Sequence) -> List[FrameRecord]:
    if not cfg.augmentation.enabled:
        return list(train)
    rng = RngStream(cfg.seed).substream(AUGMENT_KEY)
    return augment_cameras(train, cfg.augmentation, test_cameras, rng)


def prepare_data(cfg: TrainConfig, dataset: Sequence[FrameRecord]) -> PreparedData:
    """
    Subsample, split by protocol, augment the training side and fit
    normalization on it. Camera augmentation applies to the cross-camera
    protocol only; the subject protocols train on the original views.
    """
    records = subsample_10fps(dataset, cfg.source_fps)
    protocol = Protocol.parse(cfg.protocol)
    test_camera = cfg.test_camera if protocol is Protocol.CROSS_CAMERA else None
    train, test = split_protocol(records, protocol, test_camera, cfg.train_subjects, cfg.test_subjects)
    test_cameras = resolve_cameras(original_cameras(records), [test_camera]) if test_camera else []
    if protocol is Protocol.CROSS_CAMERA:
        train = augment_training_side(cfg, train, test_cameras)
    elif cfg.augmentation.enabled:
        logger.info(f"Protocol {int(protocol)}: camera augmentation skipped")
    return PreparedData(train, test, fit_norm_stats(train))


class BatchPrefetcher:
    """
    Draws an epoch's pair batches on a thread pool, at most `depth` ahead
    of the consumer, and yields them in step order.
    """

    def __init__(self, sampler: PairSampler, batch_size: int, rng: RngStream,
                 same_pose_enabled: bool, workers: int = 1, depth: int = 4):
        self.sampler = sampler
        self.batch_size = batch_size
        self.rng = rng
        self.same_pose_enabled = same_pose_enabled
        self.workers = max(1, workers)
        self.depth = max(1, depth)

    def draw(self, epoch: int, step: int) -> PairBatch:
        return self.sampler.sample(self.batch_size, self.rng.substream(epoch), step, self.same_pose_enabled)

    def epoch(self, epoch: int, n_steps: int) -> Iterator[PairBatch]:
        if self.workers == 1:
            for step in range(n_steps):
                yield self.draw(epoch, step)
            return
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            pending = deque()
            for step in range(n_steps):
                pending.append(pool.submit(self.draw, epoch, step))
                if len(pending) >= self.depth:
                    yield pending.popleft().result()
            while pending:
                yield pending.popleft().result()


def train_step(model: LiftingModel, optimizer: Adam, batch: PairBatch, cfg: TrainConfig,
               epoch: int, step: int) -> StepLosses:
    """
    One optimizer update on a pair batch.

    Raises:
        NonFiniteLoss: the total loss is NaN or infinite
    """
    optimizer.zero_grad()
    out = forward_siamese(model, batch, Mode.TRAIN, RngStream(cfg.seed).substream(epoch, step, DROPOUT_KEY))
    l2_a = l2_pose_loss(out.pred1, batch.targets_a)
    l2_b = l2_pose_loss(out.pred2, batch.targets_b)
    lambda2 = cfg.effective_lambda2
    l_s = siamese_loss(out.h1, out.h2, batch.siamese_targets)
    loss = total_loss(l2_a, l2_b, l_s, lambda2)
    if not math.isfinite(loss):
        raise NonFiniteLoss(f"total loss is {loss}", batch_id=f"{epoch}:{step}")

    if lambda2 > 0:
        dh1, dh2 = siamese_loss_grad(out.h1, out.h2, batch.siamese_targets)
        dh1, dh2 = lambda2 * dh1, lambda2 * dh2
    else:
        dh1, dh2 = np.zeros_like(out.h1), np.zeros_like(out.h2)
    backward_siamese(model, out, dh1, dh2,
                     l2_pose_loss_grad(out.pred1, batch.targets_a),
                     l2_pose_loss_grad(out.pred2, batch.targets_b))
    lr = optimizer.step(epoch)
    return StepLosses(l2_a, l2_b, l_s, loss, lr)


def check_lambda1(cfg: TrainConfig, batch: PairBatch) -> None:
    """Warn when lambda1 times the typical pose distance exceeds the largest embedding distance"""
    if not cfg.siamese_enabled or len(batch) == 0:
        return
    typical = cfg.lambda1 * float(np.median(batch.siamese_targets.pose_dists))
    bound = 2.0 * math.sqrt(cfg.m)
    if typical > bound:
        logger.warning(
            f"lambda1 * median pose distance = {typical:.2f} exceeds the embedding bound 2*sqrt(M) = {bound:.2f}; "
            f"the siamese loss cannot reach zero for most pairs"
        )


class Trainer:
    """Owns the model, optimizer and log of one training run"""

    def __init__(self, cfg: TrainConfig, data: PreparedData, model: Optional[LiftingModel] = None):
        self.cfg = cfg
        self.data = data
        self.logger = logging.getLogger(__name__)
        self.model = model or LiftingModel(cfg.model_config(), seed=cfg.seed, stats=data.stats)
        self.model.stats = data.stats
        self.optimizer = Adam(self.model.params(), cfg.adam_config())
        self.log = TrainLog(config_hash=cfg.config_hash, seed=cfg.seed)
        self.start_epoch = 0
        self.best_mpjpe = float("inf")
        self.best_epoch = -1
        self.best_checkpoint: Optional[Checkpoint] = None
        self.eval_records = _eval_subset(data.test, cfg.eval_max_frames)
        self._epoch_end: Optional[Checkpoint] = None

        sampler = PairSampler(data.train, data.stats, cfg.lambda1)
        self.steps_per_epoch = math.ceil(len(data.train) / cfg.batch_size)
        self.prefetcher = BatchPrefetcher(
            sampler, cfg.batch_size, RngStream(cfg.seed).substream(SAMPLING_KEY), cfg.uses_same_pose,
            workers=worker_count(cfg.workers or None), depth=cfg.prefetch,
        )

    # Checkpoints

    def capture(self, epoch: int) -> Checkpoint:
        return Checkpoint.capture(
            self.model, self.optimizer, epoch=epoch, best_mpjpe=self.best_mpjpe, best_epoch=self.best_epoch,
            log_matrix=self.log.to_matrix(self.cfg.include_timing),
            config_hash=self.cfg.config_hash, seed=self.cfg.seed,
        )

    def _path(self, name: str) -> Optional[str]:
        return os.path.join(self.cfg.out_dir, name) if self.cfg.out_dir else None

    def restore(self, checkpoint: Checkpoint) -> None:
        """Continue from a checkpoint taken at an epoch boundary"""
        checkpoint.check_architecture(self.cfg.model_config())
        self.model.restore(checkpoint.model_state)
        checkpoint.restore_optimizer(self.model, self.optimizer)
        self.log = TrainLog.from_matrix(checkpoint.log_matrix, self.cfg.config_hash, self.cfg.seed)
        self.start_epoch = checkpoint.epoch
        self.best_mpjpe = checkpoint.best_mpjpe
        self.best_epoch = checkpoint.best_epoch
        self.logger.info(f"Resuming at epoch {self.start_epoch} (best {self.best_mpjpe:.2f} mm "
                         f"at epoch {self.best_epoch})")

    # Loop

    def evaluate(self) -> float:
        aligned = Protocol.parse(self.cfg.protocol) is Protocol.SUBJECTS_ALIGNED
        return float(np.mean(frame_errors(self.model, self.eval_records, aligned=aligned, stats=self.data.stats)))

    def run_epoch(self, epoch: int) -> Dict[str, float]:
        started = time.perf_counter()
        sums = np.zeros(4)
        lr = self.optimizer.lr_for_epoch(epoch)
        for step, batch in enumerate(self.prefetcher.epoch(epoch, self.steps_per_epoch)):
            if epoch == 0 and step == 0:
                check_lambda1(self.cfg, batch)
            losses = train_step(self.model, self.optimizer, batch, self.cfg, epoch, step)
            sums += (losses.l2_a, losses.l2_b, losses.siamese, losses.total)
            lr = losses.lr
        means = sums / max(self.steps_per_epoch, 1)
        test_mpjpe = self.evaluate()
        return {
            "epoch": epoch, "l2_a": means[0], "l2_b": means[1], "siamese": means[2], "total": means[3],
            "test_mpjpe": test_mpjpe, "lr": lr, "wall_time": time.perf_counter() - started,
        }

    def run(self) -> Tuple[LiftingModel, TrainLog]:
        cfg = self.cfg
        self.logger.info(
            f"Training {cfg.epochs - self.start_epoch} epochs x {self.steps_per_epoch} steps on "
            f"{len(self.data.train)} records (siamese={cfg.siamese_enabled}, "
            f"augmentation={cfg.augmentation.enabled}, config {cfg.config_hash or '-'})"
        )
        self._epoch_end = self.capture(self.start_epoch)
        try:
            for epoch in range(self.start_epoch, cfg.epochs):
                row = self.run_epoch(epoch)
                self.log.append(**row)
                self.logger.info(
                    f"epoch {epoch + 1}/{cfg.epochs}  l2a {row['l2_a']:.4f}  l2b {row['l2_b']:.4f}  "
                    f"siam {row['siamese']:.4f}  total {row['total']:.4f}  "
                    f"test {row['test_mpjpe']:.2f} mm  lr {row['lr']:.6f}"
                )
                if row["test_mpjpe"] < self.best_mpjpe:
                    self.best_mpjpe, self.best_epoch = row["test_mpjpe"], epoch
                    self.best_checkpoint = self.capture(epoch + 1)
                    if self._path(BEST_CHECKPOINT):
                        save_checkpoint(self._path(BEST_CHECKPOINT), self.best_checkpoint)
                self._epoch_end = self.capture(epoch + 1)
        except KeyboardInterrupt:
            if self._path(FINAL_CHECKPOINT):
                self.logger.warning(f"Interrupted; saving the state after epoch {self._epoch_end.epoch}")
                save_checkpoint(self._path(FINAL_CHECKPOINT), self._epoch_end)
                self.log.save_csv(self._path(LOG_FILE), cfg.include_timing)
            raise

        if self._path(FINAL_CHECKPOINT):
            save_checkpoint(self._path(FINAL_CHECKPOINT), self._epoch_end)
            self.log.save_csv(self._path(LOG_FILE), cfg.include_timing)
        return self.model, self.log


def train(cfg: TrainConfig, dataset: Sequence[FrameRecord]) -> Tuple[LiftingModel, TrainLog]:
    """Prepare the protocol split and train from scratch"""
    return Trainer(cfg, prepare_data(cfg, dataset)).run()


def resume(checkpoint, cfg: TrainConfig, dataset: Sequence[FrameRecord]) -> Tuple[LiftingModel, TrainLog]:
    """
    Continue training from a checkpoint (object or path) up to cfg.epochs.

    Raises:
        SchemaMismatch: the checkpoint architecture differs from cfg
    """
    if isinstance(checkpoint, str):
        checkpoint = load_checkpoint(checkpoint)
    checkpoint.check_architecture(cfg.model_config())
    trainer = Trainer(cfg, prepare_data(cfg, dataset))
    trainer.restore(checkpoint)
    return trainer.run()


def train_on_split(cfg: TrainConfig, train_records: Sequence[FrameRecord], test_records: Sequence[FrameRecord],
                   test_cameras: Sequence = ()) -> Tuple[LiftingModel, TrainLog]:
    """Train on an explicit split; the training side is augmented here"""
    train_records = augment_training_side(cfg, train_records, test_cameras)
    data = PreparedData(list(train_records), list(test_records), fit_norm_stats(train_records))
    return Trainer(cfg, data).run()


# Ablations

ABLATION_VARIANTS: Dict[str, Dict[str, Any]] = {
    "all": {},
    "no_siamese": {"siamese_enabled": False},
    "no_augmentation": {"augmentation": {"enabled": False}},
    "no_leaky_relu": {"leaky_slope": 0.0},
    "baseline": {"siamese_enabled": False, "augmentation": {"enabled": False}},
}

AUG_LEVEL_VARIANTS: Dict[str, Dict[str, Any]] = {
    "baseline_no_aug": {"siamese_enabled": False, "augmentation": {"enabled": False}},
    "baseline_rot_aug": {"siamese_enabled": False, "augmentation": {"enabled": True, "noise_enabled": False}},
    "baseline_rot_aug_noise": {"siamese_enabled": False, "augmentation": {"enabled": True, "noise_enabled": True}},
    "siamese_no_aug": {"augmentation": {"enabled": False}},
}


def run_variants(cfg: TrainConfig, dataset: Sequence[FrameRecord], variants: Dict[str, Dict[str, Any]],
                 seeds: Sequence[int] = (0, 1, 2)) -> pd.DataFrame:
    """
    Train every variant under every seed and score the final weights on
    the protocol's test side. One row per (variant, seed).
    """
    rows = []
    for name, overrides in variants.items():
        for seed in seeds:
            run_cfg = cfg.with_overrides({**overrides, "seed": int(seed), "out_dir": None})
            logger.info(f"Ablation {name}, seed {seed} (variant {run_cfg.variant_hash()})")
            trainer = Trainer(run_cfg, prepare_data(run_cfg, dataset))
            model, _ = trainer.run()
            aligned = Protocol.parse(run_cfg.protocol) is Protocol.SUBJECTS_ALIGNED
            errors = frame_errors(model, trainer.data.test, aligned=aligned, stats=trainer.data.stats)
            rows.append({
                "variant": name,
                "seed": int(seed),
                "mpjpe_mm": float(np.mean(errors)),
                "config_hash": run_cfg.variant_hash(),
            })
    return pd.DataFrame(rows, columns=["variant", "seed", "mpjpe_mm", "config_hash"])


def summarize_variants(runs: pd.DataFrame, reference: Optional[Dict[str, float]] = None) -> pd.DataFrame:
    """Median over seeds per variant, with seed lists, config hashes and reference values"""
    order = list(dict.fromkeys(runs["variant"]))
    grouped = runs.groupby("variant", sort=False)
    table = pd.DataFrame({
        "median_mm": grouped["mpjpe_mm"].median(),
        "seeds": grouped["seed"].apply(lambda s: " ".join(str(v) for v in s)),
        "config_hash": grouped["config_hash"].first(),
    }).loc[order]
    if reference is not None:
        table["reference_mm"] = [reference.get(v, np.nan) for v in order]
    table.index.name = "variant"
    return table


def ablation_suite(cfg: TrainConfig, dataset: Sequence[FrameRecord], seeds: Sequence[int] = (0, 1, 2),
                   with_aug_levels: bool = False) -> pd.DataFrame:
    """Component ablations, optionally followed by the augmentation-level study"""
    variants = dict(ABLATION_VARIANTS)
    if with_aug_levels:
        variants.update({k: v for k, v in AUG_LEVEL_VARIANTS.items() if k not in variants})
    return run_variants(cfg, dataset, variants, seeds)


def sweep_train_fn(cfg: TrainConfig) -> SweepTrainFn:
    """
    Training callback for the camera-distance sweep. Both variants get the
    same camera augmentation, with no training camera closer to the test
    camera than the swept distance. Only the siamese variant trains with
    the siamese loss.
    """

    def train_fn(train_records, test_records, variant, seed, distance_deg):
        if variant not in SWEEP_VARIANTS:
            raise ConfigInvalid(f"unknown sweep variant {variant!r}")
        aug = {"enabled": cfg.augmentation.enabled, "min_test_distance_deg": distance_deg}
        run_cfg = cfg.with_overrides({"siamese_enabled": variant == "siamese", "augmentation": aug})
        run_cfg = run_cfg.with_overrides({"seed": seed, "out_dir": None})
        test_cameras = original_cameras(test_records)
        model, _ = train_on_split(run_cfg, train_records, test_records, test_cameras)
        return model, model.stats

    return train_fn
