import logging
import os

import pandas as pd

from lifter.profiles import reference_results
from lifter.trainer import ABLATION_VARIANTS, AUG_LEVEL_VARIANTS, ablation_suite, summarize_variants

from ..artifacts import write_csv, write_json, write_text
from ..config import RunConfig

logger = logging.getLogger(__name__)


def report_tables(runs: pd.DataFrame) -> dict:
    """Component table and, when present, the augmentation-level table"""
    reference = reference_results()
    labels = reference["labels"]
    tables = {}
    for name, variants, ref in (("ablation", ABLATION_VARIANTS, reference["ablation"]),
                                ("aug_levels", AUG_LEVEL_VARIANTS, reference["aug_levels"])):
        subset = runs[runs["variant"].isin(list(variants))]
        if subset.empty:
            continue
        table = summarize_variants(subset, ref)
        table.insert(0, "label", [labels.get(v, v) for v in table.index])
        tables[name] = table
    return tables


def cmd_ablate(run: RunConfig, with_aug_levels: bool = False) -> int:
    """Train every ablation variant under every seed and report medians beside the reference values"""
    cfg = run.train_config()
    seeds = [int(s) for s in run.section("eval")["seeds"]]
    runs = ablation_suite(cfg, run.load_dataset(), seeds, with_aug_levels=with_aug_levels)
    stem = os.path.join(run.out_dir, "ablation")
    write_csv(stem + "_runs.csv", runs, run.config_hash, seeds)

    tables = report_tables(runs)
    payload = {name: table.reset_index().to_dict("records") for name, table in tables.items()}
    write_json(stem + ".json", payload, run.config_hash, seeds)
    text = "\n\n".join(
        f"[{name}] median MPJPE (mm) over seeds {seeds}\n" + table.to_string(float_format=lambda v: f"{v:.1f}")
        for name, table in tables.items()
    )
    write_text(stem + ".txt", text)
    print(text)
    return 0
