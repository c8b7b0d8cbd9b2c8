"""
Seeded synthetic model families with known ground truth.

- gen_grouped: groups of near-identical models derived from one shared base
- gen_rotation_chain: layer sequences whose angular shape distance grows
  linearly with layer distance
- gen_outputs: models whose outputs and representations diverge together

Suite writers store a generated family as NPY files with sidecars, a
manifest.json and a ready-to-run run.toml.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import softmax
from scipy.stats import ortho_group

from src.config import DEFAULT_SEED, K_NEIGHBORS
from src.logger import logger
from src.representation import ModelOutputs, Representation, save_representation

PathLike = Union[str, Path]

ORTHOGONAL = 'orthogonal'
RANDOM_LINEAR = 'random-linear'
BETWEEN_MAPS = (ORTHOGONAL, RANDOM_LINEAR)

SUITES = ('groups', 'layers', 'prediction')

MANIFEST_JSON = 'manifest.json'
RUN_TOML = 'run.toml'

# Logit scale of the synthetic readout
LOGIT_SCALE = 3.0


def gen_grouped(
    seed: int,
    n_groups: int = 3,
    members: int = 5,
    n_instances: int = 200,
    n_features: int = 16,
    within_noise: float = 0.01,
    between_map: str = RANDOM_LINEAR,
) -> List[List[Representation]]:
    """Groups of models sharing a base, each group under its own linear map.

    Member m of group g is B @ M_g + within_noise * E, with B a shared
    standard normal base, M_g a fresh orthogonal or Gaussian map and E fresh
    noise.

    Args:
        seed: RNG seed
        n_groups: Number of groups
        members: Models per group
        n_instances: N > k of the neighborhood measures
        n_features: D >= 2
        within_noise: Noise level inside a group
        between_map: 'orthogonal' or 'random-linear'

    Returns:
        Representations per group, ids 'g{g}_m{m}', group tags 'g{g}'
    """
    if n_groups < 1 or members < 1:
        raise ValueError(f"Need at least one group and member, got {n_groups} x {members}")
    if n_instances <= K_NEIGHBORS + 2:
        raise ValueError(f"Need more than {K_NEIGHBORS + 2} instances, got {n_instances}")
    if n_features < 2:
        raise ValueError(f"Need at least 2 features, got {n_features}")
    if within_noise < 0:
        raise ValueError(f"within_noise must be nonnegative, got {within_noise}")
    if between_map not in BETWEEN_MAPS:
        raise ValueError(f"Unknown between_map: {between_map}. Choose from {BETWEEN_MAPS}")

    rng = np.random.default_rng(seed)
    base = rng.standard_normal((n_instances, n_features))

    groups = []
    for g in range(n_groups):
        if between_map == ORTHOGONAL:
            mapping = ortho_group.rvs(n_features, random_state=rng)
        else:
            mapping = rng.standard_normal((n_features, n_features)) / np.sqrt(n_features)
        group_base = base @ mapping
        group = []
        for m in range(members):
            noise = rng.standard_normal((n_instances, n_features))
            group.append(Representation(
                data=group_base + within_noise * noise,
                model_id=f"g{g}_m{m}",
                group=f"g{g}",
            ))
        groups.append(group)
    return groups


def gen_rotation_chain(
    seed: int,
    n_layers: int = 5,
    n_instances: int = 100,
    n_features: int = 8,
    theta: float = 0.2,
    model_id: str = 'chain',
) -> List[Representation]:
    """Layers R^(l) = cos(l*theta) A + sin(l*theta) B, l = 1..n_layers.

    A and B are centered with A^T A = B^T B = I / D and A^T B = 0, so every
    layer is centered with unit norm and the angular shape distance between
    layers i and j is |i - j| * theta.

    Args:
        seed: RNG seed
        n_layers: Number of layers
        n_instances: N > 2 D
        n_features: D >= 2
        theta: Angle per layer step, n_layers * theta <= pi / 2
        model_id: Model id of every layer

    Returns:
        Representations in layer order (layer attribute 1..n_layers)
    """
    if n_features < 2:
        raise ValueError(f"Need at least 2 features, got {n_features}")
    if n_layers < 1:
        raise ValueError(f"Need at least one layer, got {n_layers}")
    if n_instances <= 2 * n_features:
        raise ValueError(f"Need more than 2 * D = {2 * n_features} instances, got {n_instances}")
    if theta < 0 or n_layers * theta > np.pi / 2:
        raise ValueError(f"Invalid angle {theta}: need 0 <= n_layers * theta <= pi/2")

    rng = np.random.default_rng(seed)
    gaussian = rng.standard_normal((n_instances, 2 * n_features))
    gaussian -= gaussian.mean(axis=0, keepdims=True)
    basis, _ = np.linalg.qr(gaussian)
    A = basis[:, :n_features] / np.sqrt(n_features)
    B = basis[:, n_features:] / np.sqrt(n_features)

    return [
        Representation(
            data=np.cos(layer * theta) * A + np.sin(layer * theta) * B,
            model_id=model_id,
            layer=layer,
        )
        for layer in range(1, n_layers + 1)
    ]


def gen_outputs(
    seed: int,
    n_models: int = 10,
    n_instances: int = 500,
    n_classes: int = 10,
    divergence: Optional[Sequence[float]] = None,
    n_features: int = 32,
) -> Tuple[List[Representation], List[ModelOutputs]]:
    """Models that drift from a shared base in both representation and output.

    Model m has representation base + delta_m F_m and outputs
    softmax(Z + delta_m E_m), with Z = base @ W and E_m = F_m @ W for a fixed
    linear readout W. Labels are the base predictions argmax(Z).

    Args:
        seed: RNG seed
        n_models: Number of models
        n_instances: N >= 2
        n_classes: C >= 2
        divergence: Per-model delta_m >= 0, default linspace(0.1, 1.0, n_models)
        n_features: D of the representations

    Returns:
        (representations, outputs), aligned by model
    """
    if n_models < 1 or n_instances < 2 or n_classes < 2 or n_features < 1:
        raise ValueError(
            f"Invalid sizes: {n_models} models, N={n_instances}, C={n_classes}, D={n_features}"
        )
    deltas = np.linspace(0.1, 1.0, n_models) if divergence is None else np.asarray(divergence, dtype=np.float64)
    if deltas.shape != (n_models,):
        raise ValueError(f"Need one divergence per model, got shape {deltas.shape}")
    if np.any(deltas < 0):
        raise ValueError("Divergence scales must be nonnegative")

    rng = np.random.default_rng(seed)
    base = rng.standard_normal((n_instances, n_features))
    readout = rng.standard_normal((n_features, n_classes)) * (LOGIT_SCALE / np.sqrt(n_features))
    logits = base @ readout
    labels = np.argmax(logits, axis=1)

    reps = []
    outs = []
    width = len(str(n_models - 1))
    for m, delta in enumerate(deltas):
        model_id = f"model{m:0{width}d}"
        noise = rng.standard_normal((n_instances, n_features))
        reps.append(Representation(data=base + delta * noise, model_id=model_id))
        probs = softmax(logits + delta * (noise @ readout), axis=1)
        outs.append(ModelOutputs(probs=probs, labels=labels, model_id=model_id))
    return reps, outs


def _toml_value(value: Any) -> str:
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, (list, tuple)):
        return '[' + ', '.join(_toml_value(v) for v in value) + ']'
    raise TypeError(f"Cannot write {type(value).__name__} as TOML")


def render_run_toml(seed: int, tests: Sequence[Dict[str, Any]], out_dir: str = 'results') -> str:
    """Run file text for the given [[test]] tables."""
    lines = ['[run]', f"seed = {int(seed)}", f"out_dir = {_toml_value(out_dir)}", '']
    for test in tests:
        lines.append('[[test]]')
        for key, value in test.items():
            lines.append(f"{key} = {_toml_value(value)}")
        lines.append('')
    return '\n'.join(lines)


def _write_json(path: Path, data: Dict[str, Any]):
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write('\n')


def _save_array(path: Path, array: np.ndarray) -> str:
    np.save(path, np.ascontiguousarray(array), allow_pickle=False)
    return path.name


def write_group_suite(out_dir: PathLike, seed: int = DEFAULT_SEED, **kwargs) -> Dict[str, Any]:
    """Write a gen_grouped family and its group test."""
    out_dir = Path(out_dir)
    params = {'n_groups': 3, 'members': 5, 'n_instances': 200, 'n_features': 16,
              'within_noise': 0.01, 'between_map': RANDOM_LINEAR, **kwargs}
    groups = gen_grouped(seed, **params)

    models = []
    paths = []
    for group in groups:
        group_paths = []
        for rep in group:
            path = save_representation(rep, out_dir / f"{rep.model_id}.npy")
            group_paths.append(path.name)
            models.append({'id': rep.model_id, 'group': rep.group, 'path': path.name})
        paths.append(group_paths)

    tests = [{'kind': 'group', 'name': 'groups', 'groups': paths}]
    return {'suite': 'groups', 'seed': seed, 'params': params, 'models': models, 'tests': tests}


def write_layer_suite(out_dir: PathLike, seed: int = DEFAULT_SEED, n_models: int = 2, **kwargs) -> Dict[str, Any]:
    """Write rotation chains (one per model) and their layer test."""
    out_dir = Path(out_dir)
    params = {'n_layers': 5, 'n_instances': 100, 'n_features': 8, 'theta': 0.2, **kwargs}

    models = []
    order = []
    for m in range(n_models):
        chain = gen_rotation_chain(seed + m, model_id=f"chain{m}", **params)
        sequence = []
        for rep in chain:
            path = save_representation(rep, out_dir / f"{rep.model_id}_l{rep.layer}.npy")
            sequence.append(path.name)
        models.append({'id': f"chain{m}", 'seed': seed + m, 'layers': sequence})
        order.append(sequence)

    tests = [{'kind': 'layer', 'name': 'layers', 'layer_order': order}]
    params['n_models'] = n_models
    return {'suite': 'layers', 'seed': seed, 'params': params, 'models': models, 'tests': tests}


def write_prediction_suite(out_dir: PathLike, seed: int = DEFAULT_SEED, **kwargs) -> Dict[str, Any]:
    """Write a gen_outputs family with its accuracy and output tests."""
    out_dir = Path(out_dir)
    params = {'n_models': 10, 'n_instances': 500, 'n_classes': 10, 'n_features': 32, **kwargs}
    reps, outs = gen_outputs(seed, **params)

    labels_name = _save_array(out_dir / 'labels.npy', outs[0].labels.astype('<i8'))
    models = []
    rep_paths = []
    out_paths = []
    for rep, out in zip(reps, outs):
        rep_path = save_representation(rep, out_dir / f"{rep.model_id}.npy")
        probs_name = _save_array(out_dir / f"{rep.model_id}_probs.npy", out.probs.astype('<f8'))
        rep_paths.append(rep_path.name)
        out_paths.append(probs_name)
        models.append({'id': rep.model_id, 'path': rep_path.name, 'probs': probs_name})

    common = {'representations': rep_paths, 'outputs': out_paths, 'labels': labels_name}
    tests = [
        {'kind': 'accuracy-corr', 'name': 'accuracy', **common},
        {'kind': 'output-corr', 'name': 'outputs', 'output_diff': 'both', **common},
    ]
    params['divergence'] = 'linspace(0.1, 1.0, n_models)' if 'divergence' not in kwargs else list(kwargs['divergence'])
    return {'suite': 'prediction', 'seed': seed, 'params': params, 'models': models,
            'labels': labels_name, 'tests': tests}


SUITE_WRITERS = {
    'groups': write_group_suite,
    'layers': write_layer_suite,
    'prediction': write_prediction_suite,
}


def write_suite(suite: str, out_dir: PathLike, seed: int = DEFAULT_SEED, **kwargs) -> Path:
    """Generate a synthetic suite with its manifest.json and run.toml.

    Args:
        suite: 'groups', 'layers' or 'prediction'
        out_dir: Target directory (created if missing)
        seed: RNG seed
        **kwargs: Generator size overrides

    Returns:
        Path of the written run.toml
    """
    if suite not in SUITE_WRITERS:
        raise ValueError(f"Unknown suite: {suite}. Choose from {SUITES}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    manifest = SUITE_WRITERS[suite](out_dir, seed, **kwargs)
    _write_json(out_dir / MANIFEST_JSON, manifest)

    run_toml = out_dir / RUN_TOML
    with open(run_toml, 'w', encoding='utf-8', newline='\n') as f:
        f.write(render_run_toml(seed, manifest['tests']))

    logger.info(f"Wrote {suite} suite ({len(manifest['models'])} models) to {out_dir}")
    return run_toml
