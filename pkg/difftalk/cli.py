"""
Command-line entry point

    difftalk gen-data|train-landmarks|train-face|sample|eval|selfcheck
             [--config PATH] [--seed N] [--ablate-am] [--frames A..B]

Exit codes: 0 success, 1 validation error, 2 runtime failure, 3 selfcheck failure.
"""
import argparse
import logging
import sys
from typing import List, Optional

from difftalk import __version__, commands
from difftalk.exceptions import PipelineError, ValidationError
from difftalk.utils.config_reader import ConfigReader, parse_frame_range
from difftalk.utils.logging_setup import configure_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_SELFCHECK = 3

COMMANDS = ("gen-data", "train-landmarks", "train-face", "sample", "eval", "selfcheck")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="difftalk", description="Audio and landmark driven talking-face pipeline")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("command", choices=COMMANDS, help="Pipeline stage to run")
    parser.add_argument("--config", default=None, help="YAML config file (default: config/config.yaml)")
    parser.add_argument("--seed", type=int, default=None, help="Override the configured seed")
    parser.add_argument("--ablate-am", action="store_true", default=None,
                        help="Route audio into BM-Trans and disable AM-Trans")
    parser.add_argument("--frames", default=None, help="Held-out frame range A..B (inclusive) for sample")
    return parser


def run(args: argparse.Namespace) -> int:
    reader = ConfigReader(args.config)
    cfg = reader.run_config(seed=args.seed, ablate_am=args.ablate_am)
    configure_logging(cfg.logging.level)
    logger.info(f"difftalk {args.command} (seed={cfg.seed}, config={reader.config_file})")

    if args.command == "gen-data":
        paths = commands.gen_data(cfg)
    elif args.command == "train-landmarks":
        paths = commands.train_landmarks(cfg)
    elif args.command == "train-face":
        paths = commands.train_face(cfg)
    elif args.command == "sample":
        frames = parse_frame_range(args.frames) if args.frames else None
        paths = commands.sample(cfg, frames)
    elif args.command == "eval":
        paths = commands.eval_run(cfg)
    else:
        passed, paths = commands.selfcheck(cfg)
        if not passed:
            logger.error(f"Self-check failed, see {paths['report']}")
            return EXIT_SELFCHECK
    for name, path in sorted(paths.items()):
        logger.info(f"{name}: {path}")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging()
    try:
        return run(args)
    except ValidationError as exc:
        logger.error(f"Validation error: {exc}")
        return EXIT_VALIDATION
    except PipelineError as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        return EXIT_RUNTIME
    except Exception:
        logger.exception(f"Unexpected failure in '{args.command}'")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
