"""
Command-line entry point

    python -m src.main generate --out runs/demo
    python -m src.main train imagination --out runs/demo
    python -m src.main train guesser:imagination --out runs/demo --set guesser_epochs=10
    python -m src.main eval all --out runs/demo
    python -m src.main compare runs/a/reports/all.json runs/b/reports/all.json --out runs/demo

Exit codes: 0 success, 1 unexpected error, 2 configuration or input error,
3 missing dependency, 4 numeric or training failure.
"""

import argparse
import logging
import sys
from typing import List, Optional

from src.commands import SUITES, cmd_compare, cmd_eval, cmd_generate, cmd_train
from src.config import RunConfig, load_run_config
from src.errors import ImaginationError

logger = logging.getLogger(__name__)


def configure_logging(config: RunConfig) -> None:
    """Plain messages on stdout; timestamped records only in <out>/run.log"""
    level = logging.DEBUG if config.debug else logging.INFO if config.enable_logging else logging.WARNING
    log_file = config.paths().log_file
    log_file.parent.mkdir(parents=True, exist_ok=True)
    file_handler = logging.FileHandler(log_file, encoding="utf-8")
    file_handler.setFormatter(logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s"))
    stream_handler = logging.StreamHandler(sys.stdout)
    stream_handler.setFormatter(logging.Formatter("%(name)s - %(levelname)s - %(message)s"))
    logging.basicConfig(level=level, handlers=[stream_handler, file_handler], force=True)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="key=value configuration file")
    common.add_argument("--seed", type=int, default=None, help="root seed (overrides the config)")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one configuration value (repeatable)")
    common.add_argument("--out", default=None, help="output directory (default: runs/default)")

    parser = argparse.ArgumentParser(
        description="Imagination-regularized agents for a synthetic guessing game",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python -m src.main generate --out runs/demo
  python -m src.main train oracle:question+spatial+imagination --out runs/demo
  python -m src.main eval zeroshot --out runs/demo --seed 1
        """,
    )
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("generate", parents=[common], help="generate the world and scene splits")

    train = commands.add_parser("train", parents=[common], help="train one component")
    train.add_argument("component", help="imagination[:oracle|:guesser], classifier, oracle:<features>, "
                                         "guesser:<mode> or modulo_n")

    evaluate = commands.add_parser("eval", parents=[common], help="run an evaluation suite")
    evaluate.add_argument("suite", choices=SUITES)

    compare = commands.add_parser("compare", parents=[common], help="delta table between reports")
    compare.add_argument("reports", nargs="+", help="report JSON files; the first is the baseline")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_run_config(args.config, args.set, seed=args.seed, out_dir=args.out)
    except ImaginationError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code

    try:
        configure_logging(config)
    except OSError as e:
        print(f"error: cannot write to {config.out_dir}: {e}", file=sys.stderr)
        return 2

    logger.info("=" * 60)
    logger.info(f"{args.command} (seed {config.seed}, out {config.out_dir})")
    logger.info("=" * 60)
    try:
        if args.command == "generate":
            cmd_generate(config)
        elif args.command == "train":
            cmd_train(config, args.component)
        elif args.command == "eval":
            cmd_eval(config, args.suite)
        elif args.command == "compare":
            cmd_compare(config, args.reports)
    except ImaginationError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except Exception as e:
        logger.error(f"Unexpected error: {e}", exc_info=True)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
