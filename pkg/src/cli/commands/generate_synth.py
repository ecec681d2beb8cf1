import logging
import os
from typing import Optional

from lifter.data.records import write_dataset
from lifter.data.synthetic import generate_synthetic

from ..config import RunConfig

logger = logging.getLogger(__name__)


def cmd_generate_synth(run: RunConfig, out_path: Optional[str] = None) -> int:
    """Write the synthetic dataset described by the synth section as JSONL"""
    cfg = run.synth_config()
    out_path = out_path or os.path.join(run.out_dir, "dataset.jsonl")
    records = generate_synthetic(cfg)
    write_dataset(records, out_path)
    print(f"{len(records)} records written to {out_path} (config {run.config_hash})")
    return 0
