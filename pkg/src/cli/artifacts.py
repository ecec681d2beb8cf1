"""
Output writers. Every artifact carries the config hash and seed and is
written atomically.
"""

import io
import json
import logging
import os
from typing import Any, Dict, Sequence

import pandas as pd

from lifter.utils import atomic_write_text

from .plots import Panel, html_line_plot, svg_line_plot

logger = logging.getLogger(__name__)


def provenance_header(config_hash: str, seeds: Sequence[int]) -> str:
    return f"# config_hash={config_hash} seed={' '.join(str(s) for s in seeds)}\n"


def write_csv(path: str, table: pd.DataFrame, config_hash: str, seeds: Sequence[int], index: bool = False) -> None:
    buffer = io.StringIO()
    buffer.write(provenance_header(config_hash, seeds))
    table.to_csv(buffer, index=index, float_format="%.10g", lineterminator="\n")
    atomic_write_text(path, buffer.getvalue())
    logger.info(f"Wrote {path}")


def write_json(path: str, payload: Dict[str, Any], config_hash: str, seeds: Sequence[int]) -> None:
    document = dict(payload)
    document["provenance"] = {"config_hash": config_hash, "seeds": [int(s) for s in seeds]}
    atomic_write_text(path, json.dumps(document, indent=2, sort_keys=True) + "\n")
    logger.info(f"Wrote {path}")


def write_text(path: str, text: str) -> None:
    atomic_write_text(path, text if text.endswith("\n") else text + "\n")
    logger.info(f"Wrote {path}")


def write_plots(stem: str, panels: Sequence[Panel], config_hash: str, seed: int = 0) -> None:
    """`stem`.svg with every panel plus one interactive `stem`[_k].html per panel"""
    atomic_write_text(stem + ".svg", svg_line_plot(panels, config_hash, seed))
    for k, panel in enumerate(panels):
        suffix = "" if len(panels) == 1 else f"_{k}"
        atomic_write_text(f"{stem}{suffix}.html", html_line_plot(panel, config_hash, seed))
    logger.info(f"Wrote {os.path.basename(stem)}.svg and interactive HTML")
