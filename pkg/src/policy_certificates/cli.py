"""
Command-line interface for running and summarizing certificate experiments.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from .config import PRESETS, dump_config, load_config_file, resolve_config
from .exceptions import ConfigurationError, PolicyCertificatesError, StorageError
from .experiment import (
    export_csv,
    format_summary_table,
    run_experiment,
    summarize,
    summary_json,
)

logger = logging.getLogger(__name__)

EXIT_CONFIG = 2
EXIT_STORAGE = 3
EXIT_FAILURE = 4


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity >= 2:
        level = logging.DEBUG
    logging.basicConfig(level=level, format='%(levelname)s: %(message)s', force=True)


def _add_config_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--preset", help="Start from a named preset (see list-presets)")
    parser.add_argument("-c", "--config", help="YAML experiment file")
    parser.add_argument("--name", help="Prefix of the output files")
    parser.add_argument("--episodes", type=int, help="Episodes per seed")
    parser.add_argument("--seeds", type=int, nargs="+", help="Root seeds, one run each")
    parser.add_argument("--output-dir", dest="output_dir", help="Directory for records and reports")
    parser.add_argument("--stride", type=int, help="Keep every n-th episode record")
    parser.add_argument("--delta", type=float, help="Failure tolerance in (0, 1)")
    parser.add_argument("--n-jobs", dest="n_jobs", type=int, help="Seeds run in parallel")
    parser.add_argument(
        "--checkpoint",
        action="store_true",
        default=None,
        help="Also write the instance and the final learner statistics",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="policy-certificates",
        description="Run learners that certify their policies and audit the certificates",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  policy-certificates list-presets
  policy-certificates run --preset tabular-desk --seeds 0 1
  policy-certificates run -c experiment.yaml --output-dir results
  policy-certificates summarize results/*.report.json
  policy-certificates export-csv results/tabular-desk-seed0.records.jsonl out.csv
        """,
    )
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v for progress, -vv for debug output"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run an experiment and audit every certificate")
    _add_config_arguments(run)

    validate = commands.add_parser("validate-config", help="Resolve and print a configuration")
    _add_config_arguments(validate)

    summary = commands.add_parser("summarize", help="Cross-seed statistics of run reports")
    summary.add_argument("reports", nargs="+", help="Report JSON files")
    summary.add_argument("--json", dest="json_path", help="Write the summary JSON to this file")

    export = commands.add_parser("export-csv", help="Convert a JSONL record file to CSV")
    export.add_argument("records", help="Records JSONL file")
    export.add_argument("output", help="CSV file to write")

    commands.add_parser("list-presets", help="List the built-in presets")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    overrides: Dict[str, Any] = {
        "name": args.name,
        "episodes": args.episodes,
        "seeds": args.seeds,
        "output_dir": args.output_dir,
        "stride": args.stride,
        "n_jobs": args.n_jobs,
        "checkpoint": args.checkpoint,
    }
    if args.delta is not None:
        overrides["algorithm"] = {"delta": args.delta}
    return overrides


def _resolve(args: argparse.Namespace):
    file_data = load_config_file(args.config) if args.config else None
    if not args.preset and not file_data:
        raise ConfigurationError("give a --preset or a --config file", key="preset")
    return resolve_config(args.preset, file_data, _overrides(args))


def _run(args: argparse.Namespace) -> int:
    config = _resolve(args)
    result = run_experiment(config)
    if result.exit_code:
        print(
            f"Error: {result.total_violations} certificate violation(s) detected; "
            f"see the records in {config.output_dir}",
            file=sys.stderr,
        )
    return result.exit_code


def _validate_config(args: argparse.Namespace) -> int:
    print(dump_config(_resolve(args)), end="")
    return 0


def _summarize(args: argparse.Namespace) -> int:
    summary = summarize([Path(path) for path in args.reports])
    print(format_summary_table(summary))
    text = summary_json(summary)
    if args.json_path:
        try:
            Path(args.json_path).write_text(text + "\n", encoding="utf-8")
        except OSError as e:
            raise StorageError(
                f"Failed to write {args.json_path}: {e}", operation="summarize", original_error=e
            ) from e
    else:
        print(text)
    return 0


def _export_csv(args: argparse.Namespace) -> int:
    rows = export_csv(args.records, args.output)
    print(f"Wrote {rows} row(s) to {args.output}", file=sys.stderr)
    return 0


def _list_presets(args: argparse.Namespace) -> int:
    for name in sorted(PRESETS):
        data = PRESETS[name]
        environment = data["environment"]
        print(
            f"{name:<26} {data['algorithm']['name']:<8} {environment['kind']:<11} "
            f"T={data['episodes']:<9} seeds={len(data['seeds'])}"
        )
    return 0


COMMANDS = {
    "run": _run,
    "validate-config": _validate_config,
    "summarize": _summarize,
    "export-csv": _export_csv,
    "list-presets": _list_presets,
}


def main(argv: Optional[List[str]] = None) -> None:
    """Main CLI entry point."""
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    try:
        code = COMMANDS[args.command](args)
    except ConfigurationError as e:
        print(f"Error: invalid configuration\nDetails: {e}", file=sys.stderr)
        sys.exit(EXIT_CONFIG)
    except StorageError as e:
        print(f"Error: {e.operation or 'storage'} failed\nDetails: {e}", file=sys.stderr)
        sys.exit(EXIT_STORAGE)
    except PolicyCertificatesError as e:
        print(f"Error: run failed\nDetails: {e}", file=sys.stderr)
        sys.exit(EXIT_FAILURE)
    sys.exit(code)


if __name__ == "__main__":
    main()
