"""
Command line interface.

Usage:
    python resim.py measure --left A.npy --right B.npy --measure cka
    python resim.py synth --suite groups --seed 0 --out suites/groups
    python resim.py bench --config suites/groups/run.toml --jobs 4
    python resim.py report --input results/results.json --format table

Exit codes: 0 on success, 2 on configuration or input errors, 3 when a
cell (or the single measure) failed and --strict is set.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional

from src.cache import result_cache
from src.config import DEFAULT_JOBS, DEFAULT_SEED
from src.logger import logger
from src.measures import compute_measure, get_measure, list_measures
from src.metrics import metrics_collector
from src.representation import load_representation
from src.report import render_csv, render_json, render_table, load_report, write_report
from src.run_config import load_run_config, run_from_config
from src.synthgen import SUITES, write_suite
from src.utils import ConfigError, MeasureError, ReportError, format_error_message

EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_FAILED_CELL = 3


def _parse_param(text: str) -> tuple:
    if '=' not in text:
        raise argparse.ArgumentTypeError(f"Expected key=value, got '{text}'")
    key, value = text.split('=', 1)
    for cast in (int, float):
        try:
            return key, cast(value)
        except ValueError:
            continue
    return key, value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='resim',
        description="Benchmark representational similarity measures on grounded tests."
    )
    parser.add_argument('--debug', action='store_true', help="Log at DEBUG level and show error details")
    subparsers = parser.add_subparsers(dest='command', required=True)

    measure = subparsers.add_parser('measure', help="Compare two representation files with one measure")
    measure.add_argument('--left', required=True, help="Left representation (.npy or .csv)")
    measure.add_argument('--right', required=True, help="Right representation (.npy or .csv)")
    measure.add_argument('--measure', required=True, choices=[d.id for d in list_measures()], metavar='ID',
                         help="Measure id (see 'resim list')")
    measure.add_argument('--k', type=int, default=None, help="Neighborhood size for kNN-based measures")
    measure.add_argument('--seed', type=int, default=DEFAULT_SEED, help="Seed for stochastic measures")
    measure.add_argument('--param', type=_parse_param, action='append', default=[], metavar='KEY=VALUE',
                         help="Hyperparameter override, repeatable")
    measure.add_argument('--strict', action='store_true', help="Exit with code 3 if the measure fails")

    bench = subparsers.add_parser('bench', help="Run the tests of a TOML run file")
    bench.add_argument('--config', required=True, help="Path to run.toml")
    bench.add_argument('--out', default=None, help="Output directory (overrides [run] out_dir)")
    bench.add_argument('--jobs', type=int, default=None,
                       help=f"Parallel workers, -1 for all cores (default: config or {DEFAULT_JOBS})")
    bench.add_argument('--strict', action='store_true', help="Exit with code 3 if any cell failed")
    bench.add_argument('--no-progress', action='store_true', help="Hide progress bars")

    report = subparsers.add_parser('report', help="Render a saved results.json")
    report.add_argument('--input', required=True, help="results.json or the directory holding it")
    report.add_argument('--format', choices=('csv', 'table', 'json'), default='table')

    synth = subparsers.add_parser('synth', help="Generate a synthetic suite with its run.toml")
    synth.add_argument('--suite', required=True, choices=SUITES)
    synth.add_argument('--seed', type=int, default=DEFAULT_SEED)
    synth.add_argument('--out', required=True, help="Output directory")

    subparsers.add_parser('list', help="List registered measures")
    return parser


def _measure_params(args: argparse.Namespace) -> Dict[str, object]:
    descriptor = get_measure(args.measure)
    params = dict(args.param)
    if args.k is not None:
        if 'k' in descriptor.hyperparams:
            params['k'] = args.k
        elif 'graph_k' in descriptor.hyperparams:
            params['graph_k'] = args.k
        else:
            raise ConfigError(f"--k does not apply to {args.measure}")
    unknown = sorted(set(params) - set(descriptor.hyperparams))
    if unknown:
        raise ConfigError(f"Unknown hyperparameters for {args.measure}: {unknown}")
    return params


def cmd_measure(args: argparse.Namespace) -> int:
    params = _measure_params(args)
    left = load_representation(args.left)
    right = load_representation(args.right)
    result = compute_measure(args.measure, left, right, seed=args.seed, cache=None, **params)
    if result.ok:
        print(f"{result.value:.10g}")
        return EXIT_OK
    print('nan')
    print(f"{result.status}: {result.failure.message}", file=sys.stderr)
    return EXIT_FAILED_CELL if args.strict else EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    config = load_run_config(args.config)
    out_dir = Path(args.out) if args.out else config.out_dir

    result_cache.clear()
    metrics_collector.reset()
    report = run_from_config(config, n_jobs=args.jobs, show_progress=not args.no_progress)
    write_report(report, out_dir)
    print(render_table(report), end='')

    failed = report.failed_cells
    if failed:
        logger.warning(f"{len(failed)} cell(s) failed: " + ', '.join(f"{c.test}/{c.measure}" for c in failed))
        if args.strict:
            return EXIT_FAILED_CELL
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    report = load_report(args.input)
    renderers = {'csv': render_csv, 'table': render_table, 'json': render_json}
    print(renderers[args.format](report), end='')
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    run_toml = write_suite(args.suite, args.out, seed=args.seed)
    print(run_toml)
    return EXIT_OK


def cmd_list(args: argparse.Namespace) -> int:
    for descriptor in list_measures():
        recipe = ', '.join(descriptor.preprocessing) or '-'
        print(f"{descriptor.id:<22} {descriptor.abbreviation:<10} {descriptor.family:<10} "
              f"{descriptor.orientation:<10} {recipe}")
    return EXIT_OK


COMMANDS = {
    'measure': cmd_measure,
    'bench': cmd_bench,
    'report': cmd_report,
    'synth': cmd_synth,
    'list': cmd_list,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.debug:
        logger.setLevel(logging.DEBUG)
        for handler in logger.handlers:
            handler.setLevel(logging.DEBUG)

    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ReportError, MeasureError, FileNotFoundError, ValueError) as e:
        logger.error(format_error_message(e, include_details=args.debug))
        return EXIT_CONFIG_ERROR


if __name__ == '__main__':
    sys.exit(main())
