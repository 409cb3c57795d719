# main.py
"""
IGB laboratory command line.

Usage:
    python main.py static-ensemble --config configs/static_bn.toml --out results/bn
    python main.py gamma-scan --config configs/gamma_ln.toml --runs 200 --threads 8
    python main.py theory-table --out results/theory
    python main.py filtered-dynamics --config configs/dynamics_blob.toml
    python main.py dist-test --out results/dist
    python main.py compare results/ln_pre results/ln_post --out results/ln_diff

Every experiment writes results.json, CSV tables and manifest.json into the
output directory. On failure a JSON error report goes to stderr and, when
the output directory exists, to <out>/error.json; the exit code is 2 for
configuration errors and 1 otherwise.
"""

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from dotenv import load_dotenv

from common.api_error import AppError
from common.config import get_config, initialize_config, is_configured
from common.logger import get_app_logger
from common.scripts import dumps_json
from app.runner import execute, execute_compare, load_experiment_config
from app.schemas import ExperimentKind

logger = get_app_logger("igb.cli")


def _add_out_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", type=Path, help="output directory (beats config and IGB_OUT_DIR)")


def _add_experiment_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--config", type=Path, help="experiment file (TOML or JSON, or a manifest.json)"
    )
    _add_out_flag(parser)
    parser.add_argument("--seed", type=int, help="base seed; run i uses seed + i")
    parser.add_argument("--runs", type=int, help="number of initializations")
    parser.add_argument("--threads", type=int, help="worker threads for independent runs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="igb", description="Initial guessing bias laboratory for normalized ReLU MLPs"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    descriptions = {
        ExperimentKind.STATIC_ENSEMBLE: "G0 ensembles of untrained networks",
        ExperimentKind.GAMMA_SCAN: "layer-wise variance ratio gamma",
        ExperimentKind.THEORY_TABLE: "closed-form moments and gamma per BN batch size",
        ExperimentKind.FILTERED_DYNAMICS: "train neutral vs prejudiced initializations",
        ExperimentKind.DISTRIBUTION_TEST: "leave-one-out BN distribution checks",
    }
    for kind, help_text in descriptions.items():
        _add_experiment_flags(subparsers.add_parser(kind.value, help=help_text))

    compare = subparsers.add_parser("compare", help="difference report between two results")
    compare.add_argument("result_a", type=Path, help="result directory or results.json")
    compare.add_argument("result_b", type=Path, help="result directory or results.json")
    _add_out_flag(compare)
    return parser


def _report_error(error: AppError, out_dir: Optional[Path]) -> int:
    report = dumps_json(error.to_report())
    sys.stderr.write(report)
    if out_dir is not None and out_dir.is_dir():
        (out_dir / "error.json").write_text(report, encoding="utf-8")
    return error.exit_code


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse ``argv``, run the command and return the process exit code."""
    args = build_parser().parse_args(argv)
    out_dir: Optional[Path] = args.out
    try:
        app_config = initialize_config()
        runtime = app_config.runtime
        out_dir = out_dir or runtime.out_dir
        if args.command == "compare":
            target = out_dir or Path("results") / "compare"
            out_dir = target
            manifest = execute_compare(args.result_a, args.result_b, target)
        else:
            overrides = {
                "output_dir": args.out,
                "base_seed": args.seed,
                "runs": args.runs,
                "threads": args.threads,
            }
            config = load_experiment_config(
                args.config, ExperimentKind(args.command), runtime, overrides
            )
            out_dir = config.output_dir
            manifest = execute(config)
    except AppError as e:
        if is_configured():
            logger.error("experiment aborted", code=e.code, message=e.message, details=e.details)
        return _report_error(e, out_dir)

    logger.info("done", manifest=str(manifest), environment=get_config().environment.value)
    print(manifest)
    return 0


if __name__ == "__main__":
    load_dotenv()
    sys.exit(run())
