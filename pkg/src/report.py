"""
Report persistence: deterministic JSON, flat CSV and a text table with one
row per measure and one column per test.

Report files never contain timings or timestamps, so identical runs give
identical bytes.
"""

import json
from pathlib import Path
from typing import Dict, List, Union

import pandas as pd

from src.harness import BenchmarkReport, CellResult, measures_by_median_rank
from src.logger import logger
from src.measures import FAMILIES, get_measure
from src.utils import ReportError

PathLike = Union[str, Path]

RESULTS_JSON = 'results.json'
RESULTS_CSV = 'results.csv'
TABLE_TXT = 'table.txt'

FLOAT_FORMAT = '%.10g'


def _abbreviation(measure_id: str) -> str:
    try:
        return get_measure(measure_id).abbreviation
    except KeyError:
        return measure_id


def _family_order(measure_id: str) -> tuple:
    try:
        family = get_measure(measure_id).family
        return (FAMILIES.index(family), measure_id)
    except KeyError:
        return (len(FAMILIES), measure_id)


def render_json(report: BenchmarkReport) -> str:
    """Full report as canonical JSON."""
    return json.dumps(report.to_dict(), sort_keys=True, indent=2) + '\n'


def cells_frame(report: BenchmarkReport) -> pd.DataFrame:
    """One row per cell with its scores, rank and failure flag."""
    rank_lookup = {
        (r['test'], r['dataset'], r['architecture'], r['measure']): r for r in report.ranks
    }
    score_names = sorted({name for cell in report.cells for name in cell.scores})

    rows = []
    for cell in report.cells:
        rank = rank_lookup.get(cell.sort_key, {})
        row = {
            'test': cell.test,
            'kind': cell.kind,
            'dataset': cell.dataset,
            'architecture': cell.architecture,
            'domain': cell.domain,
            'measure': cell.measure,
            'abbreviation': _abbreviation(cell.measure),
            'status': cell.status,
            'primary': cell.primary,
            'score': cell.score,
        }
        for name in score_names:
            row[f"score_{name}"] = cell.scores.get(name)
        row['rank'] = rank.get('rank')
        row['failed'] = rank.get('failed', not cell.ok)
        row['n_pairs'] = cell.n_pairs
        row['n_failed_pairs'] = cell.n_failed_pairs
        rows.append(row)

    columns = [
        'test', 'kind', 'dataset', 'architecture', 'domain', 'measure', 'abbreviation', 'status',
        'primary', 'score', *[f"score_{name}" for name in score_names], 'rank', 'failed',
        'n_pairs', 'n_failed_pairs',
    ]
    return pd.DataFrame(rows, columns=columns)


def render_csv(report: BenchmarkReport) -> str:
    """Flat cell table as CSV."""
    return cells_frame(report).to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator='\n')


def render_table(report: BenchmarkReport) -> str:
    """Measures as rows, tests as columns, primary scores to two decimals.

    Failed cells show 'nan'. The last column is the median rank.
    """
    columns: List[tuple] = sorted({cell.group_key for cell in report.cells})
    measures = sorted({cell.measure for cell in report.cells}, key=_family_order)
    lookup: Dict[tuple, CellResult] = {(*cell.group_key, cell.measure): cell for cell in report.cells}

    header = ['Measure'] + ['/'.join(key) if key[1:] != ('synthetic', 'synthetic') else key[0] for key in columns]
    header.append('MedRank')
    rows = [header]
    for measure_id in measures:
        row = [_abbreviation(measure_id)]
        for key in columns:
            cell = lookup.get((*key, measure_id))
            if cell is None:
                row.append('-')
            elif not cell.ok:
                row.append('nan')
            else:
                row.append(f"{cell.score:.2f}")
        median = report.aggregates.get(measure_id, {}).get('median_rank')
        row.append('-' if median is None else f"{median:.1f}")
        rows.append(row)

    widths = [max(len(row[c]) for row in rows) for c in range(len(header))]
    lines = []
    for r, row in enumerate(rows):
        cells = [row[0].ljust(widths[0])] + [value.rjust(widths[c]) for c, value in enumerate(row) if c > 0]
        lines.append('  '.join(cells).rstrip())
        if r == 0:
            lines.append('-' * len(lines[0]))
    return '\n'.join(lines) + '\n'


def write_report(report: BenchmarkReport, out_dir: PathLike) -> Dict[str, Path]:
    """Write results.json, results.csv and table.txt.

    Args:
        report: Benchmark report
        out_dir: Target directory (created if missing)

    Returns:
        Mapping of file kind to written path
    """
    out_dir = Path(out_dir)
    contents = {
        'json': (RESULTS_JSON, render_json(report)),
        'csv': (RESULTS_CSV, render_csv(report)),
        'table': (TABLE_TXT, render_table(report)),
    }
    written = {}
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for kind, (filename, text) in contents.items():
            path = out_dir / filename
            with open(path, 'w', encoding='utf-8', newline='\n') as f:
                f.write(text)
            written[kind] = path
    except OSError as e:
        raise ReportError(f"Cannot write report to {out_dir}: {e}")

    logger.info(f"Report written to {out_dir} ({len(report.cells)} cells)")
    if report.aggregates:
        best = measures_by_median_rank(report.aggregates)[:3]
        logger.info(f"Best median ranks: {', '.join(best)}")
    return written


def load_report(path: PathLike) -> BenchmarkReport:
    """Read a results.json (or a directory containing one) back into a report."""
    path = Path(path)
    if path.is_dir():
        path = path / RESULTS_JSON
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ReportError(f"Report not found: {path}")
    except (OSError, json.JSONDecodeError) as e:
        raise ReportError(f"Cannot read report {path}: {e}")

    try:
        return BenchmarkReport(
            cells=[CellResult.from_dict(cell) for cell in data.get('cells', [])],
            seed=int(data.get('seed', 0)),
            measures=list(data.get('measures', [])),
            ranks=list(data.get('ranks', [])),
            aggregates=dict(data.get('aggregates', {})),
            domain_aggregates=dict(data.get('domain_aggregates', {})),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ReportError(f"Malformed report {path}: {e}")
