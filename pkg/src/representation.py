"""
Representation and model-output data model, plus file ingestion.

Binary files use the NPY format (v1.0/v2.0, '<f4' or '<f8', 2-D); CSV files
are comma-separated with one instance per row and an optional header line.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from src.logger import logger
from src.utils import MeasureError, UNDEFINED_INPUT, validate_matrix

PathLike = Union[str, Path]

BINARY_SUFFIXES = {'.npy'}
CSV_SUFFIXES = {'.csv', '.txt'}
SUPPORTED_DTYPES = (np.dtype('<f4'), np.dtype('<f8'))


def _frozen(matrix: np.ndarray) -> np.ndarray:
    """Return a read-only float64 copy."""
    data = np.array(matrix, dtype=np.float64, copy=True)
    data.setflags(write=False)
    return data


@dataclass(frozen=True)
class Representation:
    """An N x D activation matrix with identity metadata."""

    data: np.ndarray
    model_id: str = 'model'
    layer: int = 0
    group: Optional[str] = None

    def __post_init__(self):
        matrix = np.asarray(self.data)
        is_valid, error_msg = validate_matrix(matrix, min_rows=2)
        if not is_valid:
            raise MeasureError(UNDEFINED_INPUT, f"Invalid representation '{self.model_id}': {error_msg}")
        if self.layer < 0:
            raise MeasureError(UNDEFINED_INPUT, f"Layer index must be nonnegative, got {self.layer}")
        object.__setattr__(self, 'data', _frozen(matrix))

    @property
    def n_instances(self) -> int:
        return self.data.shape[0]

    @property
    def n_features(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class ModelOutputs:
    """Row-stochastic class probabilities with ground-truth labels."""

    probs: np.ndarray
    labels: np.ndarray
    model_id: str = 'model'
    tolerance: float = field(default=1e-6, repr=False)

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        labels = np.asarray(self.labels)

        if probs.ndim != 2:
            raise MeasureError(UNDEFINED_INPUT, f"Outputs must be 2-D, got {probs.ndim} dimension(s)")
        n, c = probs.shape
        if c < 2:
            raise MeasureError(UNDEFINED_INPUT, f"Need at least 2 classes, got {c}")
        if not np.all(np.isfinite(probs)) or np.any(probs < 0):
            raise MeasureError(UNDEFINED_INPUT, "Probabilities must be finite and nonnegative")
        if not np.allclose(probs.sum(axis=1), 1.0, rtol=0, atol=self.tolerance):
            raise MeasureError(UNDEFINED_INPUT, "Probability rows must sum to 1")

        if labels.ndim != 1 or labels.shape[0] != n:
            raise MeasureError(UNDEFINED_INPUT, f"Expected {n} labels, got shape {labels.shape}")
        if not np.issubdtype(labels.dtype, np.integer):
            if not np.all(np.equal(np.mod(labels, 1), 0)):
                raise MeasureError(UNDEFINED_INPUT, "Labels must be integers")
        labels = labels.astype(np.int64)
        if np.any(labels < 0) or np.any(labels >= c):
            raise MeasureError(UNDEFINED_INPUT, f"Labels must lie in [0, {c})")

        object.__setattr__(self, 'probs', _frozen(probs))
        labels = labels.copy()
        labels.setflags(write=False)
        object.__setattr__(self, 'labels', labels)

    @property
    def n_instances(self) -> int:
        return self.probs.shape[0]

    @property
    def n_classes(self) -> int:
        return self.probs.shape[1]


def as_matrix(value: Union[Representation, np.ndarray]) -> np.ndarray:
    """Get the float64 matrix behind a Representation or array."""
    if isinstance(value, Representation):
        return value.data
    matrix = np.asarray(value, dtype=np.float64)
    if matrix.ndim != 2:
        raise MeasureError(UNDEFINED_INPUT, f"Expected a 2-D matrix, got {matrix.ndim} dimension(s)")
    return matrix


def _infer_format(path: Path) -> str:
    suffix = path.suffix.lower()
    if suffix in BINARY_SUFFIXES:
        return 'binary-tensor'
    if suffix in CSV_SUFFIXES:
        return 'csv'
    raise ValueError(f"Cannot infer format from suffix '{path.suffix}'; pass format explicitly")


def read_npy(path: PathLike) -> np.ndarray:
    """Read a 2-D float matrix from an NPY file.

    Args:
        path: Path to .npy file

    Returns:
        float64 matrix in C order
    """
    try:
        array = np.load(path, allow_pickle=False)
    except (ValueError, OSError) as e:
        raise MeasureError(UNDEFINED_INPUT, f"Cannot parse binary tensor {path}: {e}")

    if array.dtype not in SUPPORTED_DTYPES:
        raise MeasureError(UNDEFINED_INPUT, f"Unsupported dtype {array.dtype} in {path}; expected <f4 or <f8")
    if array.ndim != 2:
        raise MeasureError(UNDEFINED_INPUT, f"Expected a 2-D tensor in {path}, got shape {array.shape}")

    # np.load already honours fortran_order; normalize the memory layout
    return np.ascontiguousarray(array, dtype=np.float64)


def read_csv_matrix(path: PathLike) -> np.ndarray:
    """Read a numeric matrix from CSV, skipping a non-numeric header line.

    Args:
        path: Path to CSV file

    Returns:
        float64 matrix
    """
    with open(path, 'r', encoding='utf-8') as f:
        first_line = f.readline().strip()

    has_header = False
    if first_line:
        try:
            [float(token) for token in first_line.split(',')]
        except ValueError:
            has_header = True

    try:
        frame = pd.read_csv(path, header=0 if has_header else None, dtype=np.float64)
    except (ValueError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise MeasureError(UNDEFINED_INPUT, f"Cannot parse CSV {path}: {e}")
    return frame.to_numpy(dtype=np.float64)


def _read_sidecar(path: Path) -> dict:
    sidecar = path.with_suffix('.json')
    if not sidecar.exists():
        return {}
    with open(sidecar, 'r', encoding='utf-8') as f:
        return json.load(f)


def load_representation(
    path: PathLike,
    format: Optional[str] = None,
    model_id: Optional[str] = None,
    layer: Optional[int] = None,
    group: Optional[str] = None
) -> Representation:
    """Load a representation matrix from disk.

    Metadata comes from the explicit arguments, then from a `<file>.json`
    sidecar, then from defaults (file stem as model id, layer 0).

    Args:
        path: Path to the matrix file
        format: 'binary-tensor' or 'csv'; inferred from the suffix if None
        model_id: Model identifier override
        layer: Layer index override
        group: Group tag override

    Returns:
        Representation
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Representation file not found: {path}")

    fmt = format or _infer_format(path)
    logger.debug(f"Loading representation from {path} ({fmt})")

    if fmt == 'binary-tensor':
        matrix = read_npy(path)
    elif fmt == 'csv':
        matrix = read_csv_matrix(path)
    else:
        raise ValueError(f"Unknown format: {fmt}. Use 'binary-tensor' or 'csv'.")

    if not np.all(np.isfinite(matrix)):
        raise MeasureError(UNDEFINED_INPUT, f"Non-finite entries in {path}")

    sidecar = _read_sidecar(path)
    return Representation(
        data=matrix,
        model_id=model_id if model_id is not None else str(sidecar.get('model_id', path.stem)),
        layer=layer if layer is not None else int(sidecar.get('layer', 0)),
        group=group if group is not None else sidecar.get('group'),
    )


def save_representation(rep: Representation, path: PathLike) -> Path:
    """Write a representation as NPY plus a JSON metadata sidecar.

    Args:
        rep: Representation to save
        path: Target .npy path

    Returns:
        Path of the written matrix
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.save(path, np.ascontiguousarray(rep.data, dtype='<f8'), allow_pickle=False)
    with open(path.with_suffix('.json'), 'w', encoding='utf-8') as f:
        json.dump({'model_id': rep.model_id, 'layer': rep.layer, 'group': rep.group}, f, indent=2, sort_keys=True)
        f.write('\n')
    return path


def load_outputs(probs_path: PathLike, labels_path: PathLike, model_id: Optional[str] = None) -> ModelOutputs:
    """Load model outputs (N x C probabilities) and their labels.

    Args:
        probs_path: NPY or CSV matrix of class probabilities
        labels_path: NPY or CSV vector of integer labels

    Returns:
        ModelOutputs
    """
    probs_path = Path(probs_path)
    labels_path = Path(labels_path)
    for p in (probs_path, labels_path):
        if not p.exists():
            raise FileNotFoundError(f"Output file not found: {p}")

    probs = read_npy(probs_path) if _infer_format(probs_path) == 'binary-tensor' else read_csv_matrix(probs_path)
    if _infer_format(labels_path) == 'binary-tensor':
        labels = np.load(labels_path, allow_pickle=False)
    else:
        labels = read_csv_matrix(labels_path)
    labels = np.asarray(labels).reshape(-1)

    return ModelOutputs(probs=probs, labels=labels, model_id=model_id or probs_path.stem)
