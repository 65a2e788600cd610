"""tapersim CLI entry point."""
import argparse
import logging
from typing import List, Optional

from tapersim.core.config import load_config
from tapersim.core.errors import ConfigError, PhysicsError
from tapersim.core.logging import get_run_id, setup_logging
from tapersim.experiments import EXPERIMENTS
from tapersim.runner import ExperimentRunner

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PHYSICS = 3

RUN_ALL = "run-all"
COMMANDS = (*EXPERIMENTS, RUN_ALL)


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(prog='tapersim',
                                     description='tapersim - fs-laser written waveguide taper simulator')
    parser.add_argument('command', choices=COMMANDS,
                        help='Experiment to run; run-all runs calibration (if needed) and every sweep')
    parser.add_argument('--config', '-c', help='Path to YAML config file')
    parser.add_argument('--out', '-o', help='Output directory (overrides config)')
    parser.add_argument('-v', '--verbose', action='count', default=0,
                        help='Verbosity: -v=INFO, -vv=DEBUG')
    parser.add_argument('--json-logs', action='store_true',
                        help='Output logs in JSON format')
    parser.add_argument('--workers', type=int, help='Worker threads for sweep points (overrides config)')
    return parser.parse_args(argv)


def main(argv: Optional[List[str]] = None) -> int:
    args = parse_args(argv)

    try:
        config = load_config(args.config)
    except (FileNotFoundError, ConfigError) as e:
        setup_logging(args.verbose, args.json_logs)
        logging.error(f"Configuration error: {e}")
        return EXIT_USAGE

    # CLI args override config
    if args.out:
        config.output_dir = args.out
    if args.verbose:
        config.verbosity = args.verbose
    if args.json_logs:
        config.json_logs = True
    if args.workers is not None:
        config.workers = args.workers

    setup_logging(config.verbosity, config.json_logs)
    logging.info(f"tapersim run_id={get_run_id()} command={args.command} out={config.output_dir}")

    names = list(EXPERIMENTS) if args.command == RUN_ALL else [args.command]
    runner = ExperimentRunner(config)
    try:
        runner.run(names)
    except (ConfigError, FileNotFoundError, ValueError) as e:
        logging.error(f"Usage error: {e}")
        runner.print_report()
        return EXIT_USAGE
    except PhysicsError as e:
        logging.error(f"Physics failure: {e}")
        runner.print_report()
        return EXIT_PHYSICS

    runner.print_report()
    return EXIT_OK


if __name__ == '__main__':
    raise SystemExit(main())
