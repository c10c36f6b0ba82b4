"""Command-line front end: ``hermsplit {ground-state,invariants,cost-accuracy,report}``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from . import hcl
from .benchmarks import run
from .config import WORKERS_ENV, RunConfig, workers_from_env
from .context import SolverContext
from .report import Artifacts, emit_report, load_artifacts

logger = logging.getLogger(__name__)

_COMMANDS = {
    "ground-state": "ground_state",
    "invariants": "invariants",
    "cost-accuracy": "cost_accuracy",
}

_LOG_LEVELS = (logging.WARNING, logging.INFO, logging.DEBUG)


def _add_run_options(parser: argparse.ArgumentParser) -> None:
    """One flag per RunConfig field; unset flags leave the file or default value alone."""
    opt = parser.add_argument_group("run configuration")
    add = opt.add_argument
    add("--config", type=Path, help="HCL run file with benchmark blocks")
    add("--beta", type=float, default=argparse.SUPPRESS, help="nonlinearity strength")
    add("--gamma", type=float, default=argparse.SUPPRESS, help="trap frequency")
    add("-M", "--modes", dest="M", type=int, default=argparse.SUPPRESS, help="highest Hermite index")
    add("--orders", type=int, nargs="+", default=argparse.SUPPRESS, help="splitting orders")
    add("--taus", type=float, nargs="+", default=argparse.SUPPRESS, help="time steps")
    add("--c-values", dest="c_values", type=float, nargs="+", default=argparse.SUPPRESS)
    add("-T", "--final-time", dest="T", type=float, default=argparse.SUPPRESS)
    add("--seeds", nargs="+", default=argparse.SUPPRESS, help="named initial states")
    add("-o", "--output-dir", dest="output_dir", type=Path, default=argparse.SUPPRESS)
    add(
        "-j",
        "--workers",
        type=int,
        default=argparse.SUPPRESS,
        help=f"benchmark cell processes (default: ${WORKERS_ENV} or 1)",
    )
    add("--chain-workers", dest="chain_workers", type=int, default=argparse.SUPPRESS)
    add("--repeats", type=int, default=argparse.SUPPRESS, help="timing repeats per cell")
    add("--cell-timeout", dest="cell_timeout", type=float, default=argparse.SUPPRESS)
    add("--gs-tau", dest="gs_tau", type=float, default=argparse.SUPPRESS)
    add("--gs-order", dest="gs_order", type=int, default=argparse.SUPPRESS)
    add("--stagnation-tol", dest="stagnation_tol", type=float, default=argparse.SUPPRESS)
    add("--gs-time", dest="gs_time", type=float, default=argparse.SUPPRESS)
    add("--refine-schedule", dest="refine_schedule", type=float, nargs="+", default=argparse.SUPPRESS)
    add("--record-every", dest="record_every", type=int, default=argparse.SUPPRESS)
    add("--order-study", dest="order_study", action="store_true", default=argparse.SUPPRESS)
    add("--comparison-c", dest="comparison_c", type=float, default=argparse.SUPPRESS)
    add("--continue-on-error", action="store_true", help="mark failed cells absent and go on")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hermsplit",
        description="Hermite-spectral splitting benchmarks for the 2D Gross-Pitaevskii equation.",
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging (-vv)")
    commands = parser.add_subparsers(dest="command", required=True)

    for command, name in _COMMANDS.items():
        sub = commands.add_parser(command, help=f"run the {name} benchmark")
        _add_run_options(sub)

    report = commands.add_parser("report", help="summarize the artifacts of earlier runs")
    report.add_argument("-o", "--output-dir", dest="output_dir", type=Path, default=Path("results"))
    return parser


_NOT_CONFIG = {"command", "verbose", "config", "continue_on_error"}


def resolve_config(benchmark: str, args: argparse.Namespace) -> RunConfig:
    """Defaults, then ``HERMSPLIT_WORKERS``, then the HCL block, then flags."""
    file_attrs: dict[str, Any] = {}
    if args.config is not None:
        blocks = hcl.parse(args.config, context={"env": dict(os.environ)})
        if benchmark not in blocks:
            logger.warning("%s has no '%s' benchmark block", args.config, benchmark)
        file_attrs = blocks.get(benchmark, {})
    flags = {key: value for key, value in vars(args).items() if key not in _NOT_CONFIG}
    return RunConfig.from_layers(benchmark, workers_from_env(), file_attrs, flags)


def _show(value: Any) -> str:
    if isinstance(value, float):
        return format(value, ".15g")
    return str(value)


def _print_artifacts(artifacts: Artifacts) -> None:
    print(f"[{artifacts.benchmark}] config {artifacts.config_hash[:12]}")
    for name, value in artifacts.key_numbers.items():
        print(f"  {name} = {_show(value)}")
    for check in artifacts.assertions:
        status = "PASS" if check.passed else "FAIL"
        print(f"  {status} {check.name}: {check.detail}")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = _LOG_LEVELS[min(args.verbose, len(_LOG_LEVELS) - 1)]
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    try:
        if args.command == "report":
            found = load_artifacts(args.output_dir)
            path = emit_report(found, args.output_dir)
            for artifacts in found:
                _print_artifacts(artifacts)
            print(f"summary: {path}")
            return 0 if all(item.passed for item in found) else 1

        config = resolve_config(_COMMANDS[args.command], args)
        ctx = SolverContext(continue_on_error=args.continue_on_error)
        artifacts = run(config, ctx=ctx)
    except (ValueError, ValidationError) as exc:
        print(f"hermsplit: error: {exc}", file=sys.stderr)
        return 2

    _print_artifacts(artifacts)
    return 0 if artifacts.passed else 1
