import logging
import os
from typing import Optional, Sequence

from lifter.data.protocols import split_protocol, subsample_10fps
from lifter.evaluation.experiments import embedding_rotation_experiment
from lifter.utils import worker_count

from ..artifacts import write_csv, write_plots
from ..config import RunConfig
from ..plots import Panel
from .evaluate import checkpoint_path, load_model

logger = logging.getLogger(__name__)


def cmd_embed_rotate(run: RunConfig, checkpoint: Optional[str] = None,
                     angles: Optional[Sequence[float]] = None) -> int:
    """MPJPE of decoding rotated embeddings against rotated ground truth, per angle"""
    path, _ = checkpoint_path(run, checkpoint)
    model, ckpt = load_model(run, path)
    ev = run.section("eval")
    angles = list(angles) if angles else list(ev["angles_deg"])
    dataset = subsample_10fps(run.load_dataset(), run.section("data")["source_fps"])
    _, test = split_protocol(dataset, ev["protocol"], ev["test_camera"] if ev["protocol"] == 3 else None,
                             ev["train_subjects"], ev["test_subjects"])
    table = embedding_rotation_experiment(model, test, angles, stats=ckpt.stats,
                                          workers=worker_count(run.section("train")["workers"] or None))
    stem = os.path.join(run.out_dir, "embed_rotation")
    write_csv(stem + ".csv", table, run.config_hash, [ckpt.seed])
    panel = Panel("Decoding rotated embeddings", "rotation about the vertical axis (deg)", "MPJPE (mm)", {
        "mean": (table["angle_deg"].tolist(), table["mpjpe_mm"].tolist()),
        "median": (table["angle_deg"].tolist(), table["median_mm"].tolist()),
    })
    write_plots(stem, [panel], run.config_hash, ckpt.seed)
    print(table.to_string(index=False, float_format=lambda v: f"{v:.2f}"))
    return 0
