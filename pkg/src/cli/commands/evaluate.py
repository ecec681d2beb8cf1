import logging
import os
from typing import Optional, Tuple

from lifter.checkpoint import Checkpoint, load_checkpoint
from lifter.data.protocols import subsample_10fps
from lifter.evaluation.protocol import run_protocol
from lifter.model import LiftingModel
from lifter.trainer import BEST_CHECKPOINT, FINAL_CHECKPOINT
from lifter.utils import worker_count

from ..artifacts import write_json, write_text
from ..config import RunConfig

logger = logging.getLogger(__name__)


def checkpoint_path(run: RunConfig, explicit: Optional[str] = None) -> Tuple[str, str]:
    """Path and weights label: an explicit path, else best or final in the output directory"""
    if explicit:
        return explicit, os.path.splitext(os.path.basename(explicit))[0]
    weights = run.section("eval")["weights"]
    name = BEST_CHECKPOINT if weights == "best" else FINAL_CHECKPOINT
    return os.path.join(run.out_dir, name), weights


def load_model(run: RunConfig, path: str) -> Tuple[LiftingModel, Checkpoint]:
    """
    Raises:
        SchemaMismatch: checkpoint architecture differs from the configured model
        ChecksumError: the file is corrupted
    """
    checkpoint = load_checkpoint(path)
    checkpoint.check_architecture(run.train_config().model_config())
    return checkpoint.build_model(), checkpoint


def cmd_eval(run: RunConfig, checkpoint: Optional[str] = None) -> int:
    path, weights = checkpoint_path(run, checkpoint)
    model, ckpt = load_model(run, path)
    ev = run.section("eval")
    dataset = subsample_10fps(run.load_dataset(), run.section("data")["source_fps"])
    report = run_protocol(
        model, dataset, ev["protocol"], ev["test_camera"] if ev["protocol"] == 3 else None,
        ev["train_subjects"], ev["test_subjects"], ev["with_scale"], stats=ckpt.stats,
        workers=worker_count(run.section("train")["workers"] or None),
        seed=ckpt.seed, config_hash=run.config_hash, weights=weights,
    )
    write_json(os.path.join(run.out_dir, "eval_report.json"), report.to_dict(), run.config_hash, [ckpt.seed])
    text = report.to_text()
    write_text(os.path.join(run.out_dir, "eval_table.txt"), text)
    print(text)
    return 0
