#!/usr/bin/env python3
"""
Kinetic Monte Carlo toolkit
Main CLI application
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

# Add src to path
sys.path.insert(0, str(Path(__file__).parent))

from src.core.config import Config
from src.core.exceptions import ConfigErrors, ConfigurationError, KineticError
from src.core.models import Subcommand
from src.core.run_config import SCHEMAS, overrides_from_flags, parse_config, schema_for
from src.utils.logger import logger
from src.workflow.orchestrator import ExperimentOrchestrator

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2

HELP = {
    Subcommand.ESCAPE: "Escape times of the 1-D walk from a potential well",
    Subcommand.ZZD: "Trajectories of the Zig-Zag walk on Z^d",
    Subcommand.VALIDATE_INVARIANCE: "Exact invariance residual of a sweep kernel on a torus",
    Subcommand.SCALING: "W1 gap between the rescaled walk and the Zig-Zag process",
    Subcommand.HYBRID: "Hybrid drift/jump sampler on a Lennard-Jones system",
    Subcommand.VALIDATE: "Run the validation oracle suite",
}


def _flag(key: str) -> str:
    return "--" + key.replace("_", "-")


def cmd_run(args) -> int:
    """Parse the configuration of one subcommand and hand it to the orchestrator"""
    subcommand = Subcommand(args.command)
    text = ""
    if args.config:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigurationError(f"cannot read config file {args.config}: {e}") from e
    flags = [(key, getattr(args, key, None)) for key in schema_for(subcommand)]
    cfg = parse_config(text, subcommand, overrides_from_flags(flags))
    return ExperimentOrchestrator().run(cfg)


def cmd_init(args) -> int:
    """Create the working directories and report configuration problems"""
    Config.ensure_directories()
    print("✓ Directories created")

    errors = Config.validate()
    if errors:
        print("\n⚠ Configuration warnings:")
        for error in errors:
            print(f"  - {error}")
        print("\nPlease check your .env file")
        return EXIT_CONFIG
    print("✓ Configuration valid")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Kinetic Monte Carlo toolkit: Zig-Zag walks, thinning and hybrid samplers",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        allow_abbrev=False,
    )
    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    parser_init = subparsers.add_parser("init", help="Create directories and check the environment")
    parser_init.set_defaults(func=cmd_init)

    for subcommand in SCHEMAS:
        sub = subparsers.add_parser(subcommand.value, help=HELP[subcommand], allow_abbrev=False)
        sub.add_argument("--config", metavar="FILE", help="key=value run configuration; flags win over it")
        for key, spec in schema_for(subcommand).items():
            if spec.kind == "bool":
                sub.add_argument(_flag(key), dest=key, action="store_const", const=True, default=None)
            elif spec.kind == "list":
                sub.add_argument(
                    _flag(key), dest=key, action="append", metavar="X[,X...]", help=f"repeatable (default {spec.default})"
                )
            else:
                choices = f" {{{','.join(spec.choices)}}}" if spec.choices else ""
                sub.add_argument(_flag(key), dest=key, help=f"{spec.kind}{choices} (default {spec.default!r})")
        sub.set_defaults(func=cmd_run)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main CLI entry point"""
    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return EXIT_OK

    try:
        return args.func(args)
    except ConfigErrors as e:
        logger.error(f"Invalid configuration ({len(e.issues)} problems)")
        for issue in e.issues:
            print(f"config error: {issue}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigurationError as e:
        logger.error(f"Configuration error: {e}")
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except KineticError as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_FAILURE
    except Exception as e:
        logger.error(f"Command failed: {e}", exc_info=True)
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
