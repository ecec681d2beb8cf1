import logging
import os

from lifter.data.protocols import subsample_10fps
from lifter.evaluation.experiments import aug_distance_sweep, sweep_medians
from lifter.trainer import sweep_train_fn

from ..artifacts import write_csv, write_plots
from ..config import RunConfig
from ..plots import Panel

logger = logging.getLogger(__name__)


def cmd_sweep_aug(run: RunConfig) -> int:
    """Held-out-camera error against the distance of the closest training camera"""
    cfg = run.train_config()
    ev = run.section("eval")
    seeds = [int(s) for s in ev["seeds"]]
    ring_center = run.section("augmentation")["ring_center"]
    dataset = subsample_10fps(run.load_dataset(), cfg.source_fps)
    table = aug_distance_sweep(
        sweep_train_fn(cfg), dataset, ev["sweep_distances_deg"], test_camera=ev["test_camera"],
        seeds=seeds, ring_center=tuple(ring_center) if ring_center else None,
        train_subjects=ev["train_subjects"], test_subjects=ev["test_subjects"],
    )
    stem = os.path.join(run.out_dir, "sweep_aug")
    write_csv(stem + ".csv", table, run.config_hash, seeds)
    medians = sweep_medians(table)
    write_csv(stem + "_medians.csv", medians, run.config_hash, seeds, index=True)
    panel = Panel("Held-out camera error vs. closest training camera", "distance (deg)", "median MPJPE (mm)", {
        variant: (medians.index.tolist(), medians[variant].tolist()) for variant in medians.columns
    })
    write_plots(stem, [panel], run.config_hash, seeds[0])
    print(medians.to_string(float_format=lambda v: f"{v:.2f}"))
    return 0
