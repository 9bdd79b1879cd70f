import argparse
import logging
import sys
from typing import Any, Dict, List, Optional, Sequence

from app import __version__
from app.common.errors import GeometryError, InvalidConfig
from app.harness.commands import run_command, write_outputs
from app.harness.models import Command, ExperimentConfig, Suite
from app.settings import configure_logging

log = logging.getLogger(__name__)


def parse_tolerances(items: Optional[Sequence[str]]) -> Dict[str, float]:
    out: Dict[str, float] = {}
    for item in items or []:
        name, sep, value = item.partition("=")
        if not sep or not name.strip():
            raise InvalidConfig(f"--tol expects name=value, got '{item}'")
        try:
            out[name.strip()] = float(value)
        except ValueError as e:
            raise InvalidConfig(f"--tol {name.strip()}: '{value}' is not a number") from e
    return out


def parse_direction(text: str) -> List[float]:
    try:
        return [float(p) for p in text.split(",")]
    except ValueError as e:
        raise InvalidConfig(f"--direction expects comma-separated numbers, got '{text}'") from e


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="htsantalo", description="Holmes-Thompson areas and Santaló points.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--k", help="body K: preset name, JSON file or inline JSON")
    common.add_argument("--b", help="body B: preset name, JSON file, inline JSON or 'euclid-classical'")
    common.add_argument("--resolution", type=int, help="circle nodes (n = 2) or icosphere level (n = 3)")
    common.add_argument("--seed", type=int, help="seed for randomized suites")
    common.add_argument("--tol", action="append", metavar="NAME=VALUE", help="override a named tolerance (repeatable)")
    common.add_argument("--out", help="write the JSON report here instead of stdout")
    common.add_argument("--timing", action="store_true", help="record runtime_ms in the report")

    for command in Command:
        p = sub.add_parser(command.value, parents=[common])
        if command == Command.checks:
            p.add_argument("--suite", action="append", choices=[s.value for s in Suite], help="suite to run (repeatable)")
            p.add_argument("--count", type=int, help="random instances per suite")
        if command == Command.equiaffine:
            p.add_argument("--count", type=int, help="number of random boundary normals")
        if command in (Command.first_variation, Command.equiaffine):
            p.add_argument("--direction", action="append", help="comma-separated vector (repeatable)")
        if command == Command.nonunique:
            p.add_argument("--eps0", type=float, default=0.2, help="half-length of the flat segment")
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    data: Dict[str, Any] = {
        "command": args.command,
        "k": args.k,
        "b": args.b,
        "resolution": args.resolution,
        "tolerances": parse_tolerances(args.tol),
        "out": args.out,
        "timing": args.timing,
    }
    if args.seed is not None:
        data["seed"] = args.seed
    if getattr(args, "suite", None):
        data["suites"] = args.suite
    if getattr(args, "count", None) is not None:
        data["count"] = args.count
    if getattr(args, "direction", None):
        data["directions"] = [parse_direction(d) for d in args.direction]
    if getattr(args, "eps0", None) is not None:
        data["eps0"] = args.eps0
    return ExperimentConfig.parse(data)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Exit codes: 0 ok, 2 input or geometry error, 3 solver hit its iteration cap, 4 failed check."""
    configure_logging()
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
        report, _ = run_command(config)
        path = write_outputs(report, config)
    except GeometryError as e:
        log.error("%s: %s", type(e).__name__, e)
        print(f"error: {e}", file=sys.stderr)
        return 2

    if path is None:
        sys.stdout.write(report.to_json() + "\n")
    else:
        log.info("report written to %s", path)
    return report.exit_code
