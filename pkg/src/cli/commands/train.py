import logging
import os
from typing import Optional

from lifter.trainer import BEST_CHECKPOINT, FINAL_CHECKPOINT, TrainLog, resume, train

from ..artifacts import write_plots, write_text
from ..config import RunConfig
from ..plots import Panel

logger = logging.getLogger(__name__)


def curve_panels(log: TrainLog) -> list:
    table = log.frame(include_timing=False)
    epochs = (table["epoch"] + 1).tolist()
    losses = Panel("Training loss", "epoch", "loss (normalized units)", {
        "total": (epochs, table["total"].tolist()),
        "l2 branch a": (epochs, table["l2_a"].tolist()),
        "l2 branch b": (epochs, table["l2_b"].tolist()),
        "siamese": (epochs, table["siamese"].tolist()),
    })
    error = Panel("Test error", "epoch", "MPJPE (mm)", {"test MPJPE": (epochs, table["test_mpjpe"].tolist())})
    return [losses, error]


def cmd_train(run: RunConfig, resume_from: Optional[str] = None) -> int:
    """Train, then write checkpoints, the log CSV and the loss curves into the output directory"""
    cfg = run.train_config()
    os.makedirs(cfg.out_dir, exist_ok=True)
    write_text(os.path.join(cfg.out_dir, "config.json"), run.to_json())
    dataset = run.load_dataset()
    if resume_from:
        _, log = resume(resume_from, cfg, dataset)
    else:
        _, log = train(cfg, dataset)
    write_plots(os.path.join(cfg.out_dir, "loss_curve"), curve_panels(log), run.config_hash, run.seed)

    if len(log):
        last = log.rows[-1]
        best = min(log.rows, key=lambda r: r["test_mpjpe"])
        print(f"Final test MPJPE {last['test_mpjpe']:.2f} mm after {len(log)} epochs; "
              f"best {best['test_mpjpe']:.2f} mm at epoch {int(best['epoch']) + 1}")
    print(f"Checkpoints: {os.path.join(cfg.out_dir, FINAL_CHECKPOINT)}, "
          f"{os.path.join(cfg.out_dir, BEST_CHECKPOINT)} (config {run.config_hash})")
    return 0
