"""Command-line entry point for the thermopiezo toolkit."""

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from thermopiezo import __version__
from thermopiezo.config.constants import ExitCode
from thermopiezo.config.settings import RunConfig, get_settings, load_config
from thermopiezo.errors import ConfigValidationError, ThermoPiezoError, exit_code_for
from thermopiezo.runs.orchestrator import SUBCOMMANDS, RunOrchestrator, config_from_report
from thermopiezo.utils.logging import get_logger, setup_logging

logger = get_logger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thermopiezo",
        description="Simulate and certify boundary-stabilized thermo-piezoelectric beams.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", type=Path, help="YAML run configuration")
    parser.add_argument("--out", type=Path, help="Output directory for artifacts")
    parser.add_argument("--seed", type=int, default=0, help="Seed for random-state checks")
    parser.add_argument("--quiet", action="store_true", help="Only log warnings and errors")
    return parser


def _load(args: argparse.Namespace) -> RunConfig:
    if args.config is not None:
        return load_config(args.config)
    if args.subcommand == "verify" and args.out is not None:
        return config_from_report(args.out)
    raise ConfigValidationError(f"{args.subcommand} needs --config")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run one subcommand and return its exit code."""
    args = build_parser().parse_args(argv)
    settings = get_settings()
    setup_logging(level=settings.log_level, quiet=args.quiet)

    try:
        cfg = _load(args)
        base_dir = args.config.parent if args.config is not None else None
        orchestrator = RunOrchestrator(cfg, args.out, settings, args.seed, base_dir)
        if cfg.logging.level or cfg.logging.file:
            setup_logging(
                level=cfg.logging.level or settings.log_level,
                log_file=cfg.logging.file,
                quiet=args.quiet,
                out_dir=orchestrator.out_dir,
            )
        code = orchestrator.run(args.subcommand)
    except ThermoPiezoError as e:
        code = exit_code_for(e)
        logger.error(f"{type(e).__name__}: {e}")
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        code = ExitCode.FAILURE
    except Exception as e:
        logger.error(f"Fatal error: {e}", exc_info=True)
        code = ExitCode.FAILURE

    return int(code)


if __name__ == "__main__":
    sys.exit(main())
