"""
TOML run configuration for `resim bench`.

Layout:

    [run]
    seed = 0
    out_dir = "results"
    measures = ["cka", "orth_procrustes"]   # optional, default: all

    [params.imd]                            # optional hyperparameter overrides
    probes = 200

    [[test]]
    kind = "group"                          # accuracy-corr | output-corr | group | layer
    name = "groups"
    groups = [["g0_m0.npy", "g0_m1.npy"], ["g1_m0.npy", "g1_m1.npy"]]

Prediction tests list `representations`, `outputs` and a shared `labels`
file; layer tests list `layer_order` (one path list per model, or a single
flat list for one model). Relative paths resolve against the config file.
"""

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from src.config import DEFAULT_OUT_DIR, DEFAULT_SEED
from src.harness import (
    GROUP, LAYER, PREDICTION_KINDS, BenchmarkReport, BenchmarkRunner, TestSpec
)
from src.logger import logger
from src.measures import get_measure
from src.representation import load_outputs, load_representation
from src.utils import ConfigError

PathLike = Union[str, Path]

TEST_KEYS = {
    'kind', 'name', 'measures', 'seed', 'output_diff', 'dataset', 'architecture', 'domain',
    'representations', 'groups', 'outputs', 'labels', 'layer_order',
}


@dataclass(frozen=True)
class RunConfig:
    """Parsed run file."""

    seed: int = DEFAULT_SEED
    out_dir: Path = DEFAULT_OUT_DIR
    measures: Tuple[str, ...] = ()
    jobs: Optional[int] = None
    params: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    tests: Tuple[TestSpec, ...] = ()
    base_dir: Path = Path('.')


def _resolve(base_dir: Path, value: Any, where: str) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"{where}: expected a path string, got {value!r}")
    path = Path(value)
    if not path.is_absolute():
        path = base_dir / path
    if not path.exists():
        raise ConfigError(f"{where}: file not found: {path}")
    return str(path)


def _path_list(base_dir: Path, values: Any, where: str) -> Tuple[str, ...]:
    if not isinstance(values, list):
        raise ConfigError(f"{where}: expected a list of paths")
    return tuple(_resolve(base_dir, value, where) for value in values)


def _check_measures(measures: Any, where: str) -> Tuple[str, ...]:
    if not isinstance(measures, list) or not all(isinstance(m, str) for m in measures):
        raise ConfigError(f"{where}: measures must be a list of measure ids")
    for measure_id in measures:
        try:
            get_measure(measure_id)
        except KeyError as e:
            raise ConfigError(f"{where}: {e.args[0]}")
    return tuple(measures)


def _check_params(params: Any) -> Dict[str, Dict[str, Any]]:
    if not isinstance(params, dict):
        raise ConfigError("[params] must be a table of per-measure tables")
    checked = {}
    for measure_id, overrides in sorted(params.items()):
        try:
            descriptor = get_measure(measure_id)
        except KeyError as e:
            raise ConfigError(f"[params.{measure_id}]: {e.args[0]}")
        if not isinstance(overrides, dict):
            raise ConfigError(f"[params.{measure_id}] must be a table")
        unknown = sorted(set(overrides) - set(descriptor.hyperparams))
        if unknown:
            raise ConfigError(
                f"[params.{measure_id}]: unknown hyperparameters {unknown}; "
                f"known: {sorted(descriptor.hyperparams)}"
            )
        checked[measure_id] = dict(overrides)
    return checked


def _parse_test(table: Dict[str, Any], index: int, base_dir: Path, seed: int) -> TestSpec:
    where = f"[[test]] #{index + 1}"
    unknown = sorted(set(table) - TEST_KEYS)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    if 'kind' not in table:
        raise ConfigError(f"{where}: missing 'kind'")
    kind = table['kind']
    name = str(table.get('name', f"{kind}-{index + 1}"))
    where = f"[[test]] '{name}'"
    try:
        test_seed = int(table.get('seed', seed))
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: seed must be an integer, got {table.get('seed')!r}")

    fields: Dict[str, Any] = {
        'kind': kind,
        'name': name,
        'seed': test_seed,
        'output_diff': table.get('output_diff', 'jsd'),
        'dataset': str(table.get('dataset', 'synthetic')),
        'architecture': str(table.get('architecture', 'synthetic')),
        'domain': str(table.get('domain', 'synthetic')),
    }
    if 'measures' in table:
        fields['measures'] = _check_measures(table['measures'], where)

    if kind in PREDICTION_KINDS:
        for key in ('representations', 'outputs', 'labels'):
            if key not in table:
                raise ConfigError(f"{where}: prediction tests need '{key}'")
        fields['representations'] = _path_list(base_dir, table['representations'], where)
        fields['outputs'] = _path_list(base_dir, table['outputs'], where)
        fields['labels'] = _resolve(base_dir, table['labels'], where)
        if len(fields['representations']) != len(fields['outputs']):
            raise ConfigError(f"{where}: representations and outputs must have equal length")
        if len(fields['representations']) < 3:
            raise ConfigError(f"{where}: prediction tests need at least 3 models")
    elif kind == GROUP:
        groups = table.get('groups')
        if not isinstance(groups, list) or len(groups) < 2:
            raise ConfigError(f"{where}: group tests need at least 2 groups")
        fields['groups'] = tuple(_path_list(base_dir, members, where) for members in groups)
        if any(len(members) < 2 for members in fields['groups']):
            raise ConfigError(f"{where}: every group needs at least 2 members")
    elif kind == LAYER:
        order = table.get('layer_order')
        if not isinstance(order, list) or not order:
            raise ConfigError(f"{where}: layer tests need 'layer_order'")
        sequences = order if isinstance(order[0], list) else [order]
        fields['layer_order'] = tuple(_path_list(base_dir, seq, where) for seq in sequences)
        if any(len(seq) < 3 for seq in fields['layer_order']):
            raise ConfigError(f"{where}: layer tests need at least 3 layers per model")

    try:
        return TestSpec(**fields)
    except ValueError as e:
        raise ConfigError(f"{where}: {e}")


def parse_run_config(data: Dict[str, Any], base_dir: PathLike = '.') -> RunConfig:
    """Validate a parsed TOML document.

    Args:
        data: Parsed TOML mapping
        base_dir: Directory relative paths resolve against

    Returns:
        RunConfig
    """
    base_dir = Path(base_dir)
    unknown = sorted(set(data) - {'run', 'params', 'test'})
    if unknown:
        raise ConfigError(f"Unknown top-level tables: {unknown}")

    run = data.get('run', {})
    if not isinstance(run, dict):
        raise ConfigError("[run] must be a table")
    try:
        seed = int(run.get('seed', DEFAULT_SEED))
        jobs = int(run['jobs']) if 'jobs' in run else None
    except (TypeError, ValueError) as e:
        raise ConfigError(f"[run]: {e}")

    out_dir = Path(run.get('out_dir', DEFAULT_OUT_DIR))
    if not out_dir.is_absolute():
        out_dir = base_dir / out_dir
    measures = _check_measures(run['measures'], '[run]') if 'measures' in run else ()
    params = _check_params(data.get('params', {}))

    tests = data.get('test', [])
    if not isinstance(tests, list) or not tests:
        raise ConfigError("At least one [[test]] table is required")
    specs = tuple(_parse_test(table, i, base_dir, seed) for i, table in enumerate(tests))
    names = [spec.name for spec in specs]
    if len(set(names)) != len(names):
        raise ConfigError(f"Test names must be unique: {names}")

    return RunConfig(
        seed=seed,
        out_dir=out_dir,
        measures=measures,
        jobs=jobs,
        params=params,
        tests=specs,
        base_dir=base_dir,
    )


def load_run_config(path: PathLike) -> RunConfig:
    """Read and validate a TOML run file."""
    path = Path(path)
    try:
        with open(path, 'rb') as f:
            data = tomllib.load(f)
    except FileNotFoundError:
        raise ConfigError(f"Config file not found: {path}")
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"Cannot parse {path}: {e}")

    config = parse_run_config(data, base_dir=path.resolve().parent)
    logger.info(f"Loaded run config {path}: {len(config.tests)} test(s)")
    return config


def load_test_inputs(spec: TestSpec) -> Dict[str, Any]:
    """Load the files a test spec refers to.

    Returns:
        Inputs for BenchmarkRunner.run: 'reps'/'outs', 'groups' or 'models'
    """
    if spec.kind in PREDICTION_KINDS:
        reps = [load_representation(path) for path in spec.representations]
        outs = [
            load_outputs(path, spec.labels, model_id=rep.model_id)
            for path, rep in zip(spec.outputs, reps)
        ]
        return {'reps': reps, 'outs': outs}
    if spec.kind == GROUP:
        return {'groups': [[load_representation(path) for path in members] for members in spec.groups]}
    return {
        'models': [
            [load_representation(path) for path in sequence]
            for sequence in spec.layer_order
        ]
    }


def run_from_config(config: RunConfig, n_jobs: Optional[int] = None, show_progress: bool = False) -> BenchmarkReport:
    """Load every test's inputs and run the benchmark.

    Args:
        config: Parsed run configuration
        n_jobs: Worker count; falls back to the config, then to DEFAULT_JOBS
        show_progress: Whether to show progress bars

    Returns:
        BenchmarkReport
    """
    runner_kwargs: Dict[str, Any] = {
        'measures': config.measures or None,
        'measure_params': config.params,
        'show_progress': show_progress,
    }
    jobs = n_jobs if n_jobs is not None else config.jobs
    if jobs is not None:
        runner_kwargs['n_jobs'] = jobs
    runner = BenchmarkRunner(**runner_kwargs)

    tests: List[Tuple[TestSpec, Dict[str, Any]]] = []
    for spec in config.tests:
        logger.info(f"Loading inputs for test '{spec.name}' ({spec.kind})")
        tests.append((spec, load_test_inputs(spec)))
    return runner.run(tests, seed=config.seed)
