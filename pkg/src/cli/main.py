"""
eqlf: train and evaluate the rotation-equivariant pose lifter.

    eqlf generate-synth   write a synthetic JSONL dataset
    eqlf train            train, save best/final checkpoints, log CSV, curves
    eqlf eval             protocol report for a checkpoint
    eqlf embed-rotate     MPJPE of decoded rotated embeddings per angle
    eqlf sweep-aug        held-out error vs. closest training camera distance
    eqlf ablate           component ablation table

Exit codes: 0 ok, 2 config error, 3 data error, 4 numeric failure,
5 I/O, 130 interrupted, 1 anything else.
"""

import argparse
import logging
import sys
from typing import List, Optional

from lifter.errors import ConfigInvalid, LifterError
from lifter.profiles import PROFILES, is_smoke_sized

from .commands import cmd_ablate, cmd_embed_rotate, cmd_eval, cmd_generate_synth, cmd_sweep_aug, cmd_train
from .config import resolve_config

logger = logging.getLogger("cli")

EXIT_INTERRUPTED = 130
LONG_COMMANDS = ("sweep-aug", "ablate")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON or YAML run configuration")
    common.add_argument("--profile", choices=sorted(PROFILES), help="named preset applied before --config")
    common.add_argument("--set", dest="sets", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override one config value (repeatable; value parsed as YAML)")
    common.add_argument("--seed", type=int, help="training seed (train.seed)")
    common.add_argument("--out", help="output directory (output.dir)")
    common.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    parser = argparse.ArgumentParser(prog="eqlf", description="Rotation-equivariant 2D-to-3D pose lifting")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-synth", parents=[common], help="write a synthetic dataset")
    p.add_argument("--dataset", help="output JSONL path (default <out>/dataset.jsonl)")

    p = sub.add_parser("train", parents=[common], help="train a model")
    p.add_argument("--dataset", help="input JSONL (overrides data.path)")
    p.add_argument("--resume", metavar="CHECKPOINT", help="continue from a checkpoint")

    p = sub.add_parser("eval", parents=[common], help="evaluate a checkpoint under the configured protocol")
    p.add_argument("--dataset", help="input JSONL (overrides data.path)")
    p.add_argument("--checkpoint", help="checkpoint file (default <out>/final.eqlf or best.eqlf)")

    p = sub.add_parser("embed-rotate", parents=[common], help="embedding rotation experiment")
    p.add_argument("--dataset", help="input JSONL (overrides data.path)")
    p.add_argument("--checkpoint", help="checkpoint file (default <out>/final.eqlf or best.eqlf)")
    p.add_argument("--angles", type=float, nargs="+", help="rotation angles in degrees")

    for name, help_text in (("sweep-aug", "training-camera distance sweep"), ("ablate", "component ablations")):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--dataset", help="input JSONL (overrides data.path)")
        p.add_argument("--confirm-long", action="store_true", help="acknowledge a multi-run training budget")
        if name == "ablate":
            p.add_argument("--with-aug-levels", action="store_true",
                           help="also run the augmentation-level study")
    return parser


def dispatch(args: argparse.Namespace) -> int:
    sets = list(args.sets)
    if getattr(args, "dataset", None) and args.command != "generate-synth":
        sets.append(f"data.path={args.dataset}")
    run = resolve_config(args.profile, args.config, sets, args.seed, args.out)
    logger.info(f"{args.command}: config {run.config_hash}, seed {run.seed}, output {run.out_dir}")

    if args.command in LONG_COMMANDS and not args.confirm_long and not is_smoke_sized(run.data):
        raise ConfigInvalid(f"{args.command} trains many models at this size; pass --confirm-long "
                            f"or use the smoke profile")

    if args.command == "generate-synth":
        return cmd_generate_synth(run, args.dataset)
    if args.command == "train":
        return cmd_train(run, args.resume)
    if args.command == "eval":
        return cmd_eval(run, args.checkpoint)
    if args.command == "embed-rotate":
        return cmd_embed_rotate(run, args.checkpoint, args.angles)
    if args.command == "sweep-aug":
        return cmd_sweep_aug(run)
    return cmd_ablate(run, args.with_aug_levels)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
                        stream=sys.stdout)
    try:
        return dispatch(args)
    except LifterError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except KeyboardInterrupt:
        logger.error("Interrupted")
        return EXIT_INTERRUPTED
    except Exception:
        logger.exception("Unexpected failure")
        return 1


if __name__ == "__main__":
    sys.exit(main())
