"""Command line front end: ``python -m app.cli <command> [options]``.

Exit status 0 means the command ran and its verdicts are in the report; 2 is
a configuration or validation problem; 3 is an internal invariant breach.
"""

import argparse
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from app.config import settings
from app.exceptions import InvariantBreachError, PreconditionError, ValidationFailure
from app.schemas import Command, OutputFormat, SweepRequest
from app.services.analysis_service import analysis_service
from app.services.problem_service import problem_service
from app.services.report_service import report_service
from app.services.sweep_service import sweep_service

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_BREACH = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="app.cli", description=settings.PROJECT_NAME)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--depth", type=int, default=None, help="depth N (norm, witness)")
    common.add_argument("--out", default=settings.OUTPUT_DIR, help="directory for reports")
    common.add_argument("--format", choices=[f.value for f in OutputFormat], default=OutputFormat.JSON.value)

    for command in (Command.CHECK, Command.WITNESS, Command.EXTEND, Command.NORM, Command.FOURIER):
        p = sub.add_parser(command.value, parents=[common])
        p.add_argument("--config", required=True, help="problem configuration (JSON)")

    sweep = sub.add_parser(Command.SWEEP.value, parents=[common])
    sweep.add_argument("--config", default=None, help="problem configuration whose seed is used when --seed is absent")
    sweep.add_argument("--seed", type=int, default=None, help="root seed of the sweep")
    sweep.add_argument("--instances", type=int, default=settings.SWEEP_INSTANCES)
    sweep.add_argument("--ti-instances", type=int, default=settings.SWEEP_TI_INSTANCES)
    sweep.add_argument("--workers", type=int, default=settings.SWEEP_WORKERS)
    sweep.add_argument("--monitor-embedding", action="store_true")
    return parser


def _sweep_seed(args: argparse.Namespace) -> int:
    if args.seed is not None:
        return args.seed
    if args.config is not None:
        seed = problem_service.load(args.config).seed
        if seed is not None:
            return seed
    return settings.DEFAULT_SEED


def _run(args: argparse.Namespace) -> List[str]:
    fmt = OutputFormat(args.format)
    if args.command == Command.SWEEP.value:
        request = SweepRequest(
            seed=_sweep_seed(args),
            instances=args.instances,
            ti_instances=args.ti_instances,
            depth=args.depth or settings.SWEEP_DEPTH,
            workers=args.workers,
            monitor_embedding=args.monitor_embedding,
        )
        report = sweep_service.run_sweep(request)
        return [str(p) for p in report_service.write_sweep(report, args.out, fmt)]

    problem = problem_service.build(problem_service.load(args.config))
    command = Command(args.command)
    if command == Command.CHECK:
        report = analysis_service.run_check(problem)
    elif command == Command.WITNESS:
        report = analysis_service.run_witness(problem, args.depth)
    elif command == Command.EXTEND:
        report = analysis_service.run_extend(problem)
    elif command == Command.NORM:
        report = analysis_service.run_norm(problem, args.depth)
    else:
        report = analysis_service.run_fourier(problem)
    return [str(p) for p in report_service.write_run(report, args.out, fmt)]


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=settings.LOG_LEVEL)
    try:
        for path in _run(args):
            print(path)
        return EXIT_OK
    except (ValidationFailure, PreconditionError, ValidationError) as e:
        logger.error(f"{args.command} rejected its input: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except InvariantBreachError as e:
        logger.error(f"{args.command} hit an invariant breach: {e}", exc_info=True)
        print(f"invariant breach: {e}", file=sys.stderr)
        return EXIT_BREACH
    except Exception as e:
        logger.error(f"{args.command} failed unexpectedly: {e}", exc_info=True)
        print(f"internal error: {e}", file=sys.stderr)
        return EXIT_BREACH


if __name__ == "__main__":
    sys.exit(main())
