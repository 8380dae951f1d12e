#!/usr/bin/env python3
"""
Command line entry point.

Usage:
    filterstat run --config configs/qd_lambda_sweep.json [--out results] [--oracle sensor|kernel|none]
                   [--threads N]
    filterstat spectrum --config configs/rf_mollow_spectrum.json [--out results]

Exit codes: 0 on success, 2 on a configuration error, 3 when any sweep row or oracle comparison failed.
"""

import argparse
import logging
import os
import sys
from typing import List, Optional

from filterstat.__version__ import __version__
from filterstat.config import RunConfig
from filterstat.errors import ConfigError, FilterstatError
from filterstat.logging_config import setup_logging
from filterstat.sweeps import ORACLE_MODES, SweepRunner, write_outputs, write_spectrum

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FAILED_ROWS = 3


def _threads(args: argparse.Namespace, config: RunConfig) -> int:
    env_threads = os.getenv("FILTERSTAT_THREADS")
    if env_threads:
        try:
            threads = int(env_threads)
        except ValueError:
            raise ConfigError(f"FILTERSTAT_THREADS must be an integer, got '{env_threads}'")
    else:
        threads = args.threads or config.threads
    if threads < 1:
        raise ConfigError(f"Thread count must be at least 1, got {threads}")
    return threads


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="filterstat",
        description="Filtered emission spectra and zero-delay g2 of quantum emitters",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", help="Log level (default INFO, DEBUG with FILTERSTAT_DEBUG)", default=None)
    subparsers = parser.add_subparsers(dest="command", required=True)

    run_parser = subparsers.add_parser("run", help="Run the configured sweep and write all result files")
    run_parser.add_argument("--config", required=True, help="Path to run configuration JSON file")
    run_parser.add_argument("--out", help="Output directory (default: config 'output')", default=None)
    run_parser.add_argument("--oracle", choices=ORACLE_MODES, help="Override the configured oracles", default=None)
    run_parser.add_argument("--threads", type=int, help="Worker threads for sweep points", default=None)

    spectrum_parser = subparsers.add_parser("spectrum", help="Write only the emission spectrum")
    spectrum_parser.add_argument("--config", required=True, help="Path to run configuration JSON file")
    spectrum_parser.add_argument("--out", help="Output directory (default: config 'output')", default=None)
    return parser


def _run(args: argparse.Namespace, config: RunConfig) -> int:
    threads = _threads(args, config)
    output_dir = args.out or config.output
    runner = SweepRunner(config, threads=threads, oracle=args.oracle)

    print(f"📈 Sweep over {config.sweep.axis}: {len(config.sweep.grid.values())} points, {len(config.filters)} filters")
    print(f"   Model: {config.model.kind}, oracle: {runner.oracle_mode}, threads: {threads}")
    result = runner.run()
    written = write_outputs(result, config, output_dir, runner.oracle_mode)

    for minimum in result.minima:
        marker = " (grid boundary)" if minimum.boundary else ""
        print(
            f"  • {minimum.filter_kind}: g2 min {minimum.g2_min:.6g} at {minimum.axis} = {minimum.axis_opt:.6g}{marker}"
        )
    compared = [row for row in result.oracle_rows if row.ok]
    if compared:
        worst = max(compared, key=lambda row: row.relative_difference)
        print(f"  • worst oracle difference: {worst.relative_difference:.2e} ({worst.oracle}, {worst.detail})")

    print(f"\n✓ Wrote {', '.join(written)} to {output_dir}")
    code = EXIT_OK
    failed = result.failed_rows
    if failed:
        print(f"✗ {len(failed)} of {len(result.rows)} rows failed; see the status column of g2_sweep.csv")
        code = EXIT_FAILED_ROWS
    failed_oracle = result.failed_oracle_rows
    if failed_oracle:
        print(
            f"✗ {len(failed_oracle)} of {len(result.oracle_rows)} oracle comparisons failed; "
            f"see the status column of oracle.csv"
        )
        code = EXIT_FAILED_ROWS
    return code


def _spectrum(args: argparse.Namespace, config: RunConfig) -> int:
    output_dir = args.out or config.output
    header, rows = SweepRunner(config).spectrum()
    path = write_spectrum(output_dir, header, rows)
    print(f"\n✓ Wrote emission spectrum ({len(rows)} points) to {path}")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    setup_logging(args.log_level)

    print("🔬 filterstat")
    print("=" * 50)
    print(f"Loading configuration from: {args.config}")

    try:
        config = RunConfig.from_file(args.config)
        if args.command == "run":
            code = _run(args, config)
        else:
            code = _spectrum(args, config)
    except ConfigError as e:
        print(f"✗ Configuration error: {e}")
        sys.exit(EXIT_CONFIG)
    except FilterstatError as e:
        logger.exception("Run aborted")
        print(f"✗ Error: {e}")
        sys.exit(EXIT_FAILED_ROWS)

    sys.exit(code)


if __name__ == "__main__":
    main()
