"""
Measure registry.

Every similarity measure registers itself with a descriptor (family,
orientation, preprocessing recipe, default hyperparameters). The registered
function is the public operation: it validates both inputs, applies the
recipe, merges hyperparameters and calls the measure kernel.
`compute_measure` is the failure-safe entry point used by the harness.
"""

import time
import traceback
from dataclasses import dataclass, field
from functools import wraps
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np

from src.cache import ResultCache, result_cache
from src.logger import logger
from src.metrics import MetricsCollector, metrics_collector
from src.preprocess import PREPROCESSING_STEPS, apply_preprocessing
from src.representation import as_matrix
from src.utils import (
    DIMENSION_MISMATCH, NUMERICAL, UNDEFINED_INPUT, MeasureError, hash_arrays, validate_matrix
)

FAMILIES = ('alignment', 'rsm', 'cca', 'neighbors', 'statistic', 'topology')
SIMILARITY = 'similarity'
DISTANCE = 'distance'


@dataclass(frozen=True)
class MeasureFailure:
    kind: str
    message: str


@dataclass(frozen=True)
class MeasureResult:
    """A finite score or a structured failure, never both."""

    value: Optional[float] = None
    failure: Optional[MeasureFailure] = None

    def __post_init__(self):
        if (self.value is None) == (self.failure is None):
            raise ValueError("MeasureResult needs exactly one of value or failure")
        if self.value is not None and not np.isfinite(self.value):
            raise ValueError(f"MeasureResult value must be finite, got {self.value}")

    @classmethod
    def success(cls, value: float) -> 'MeasureResult':
        value = float(value)
        if not np.isfinite(value):
            return cls.failed(NUMERICAL, f"Measure returned non-finite value {value}")
        return cls(value=value)

    @classmethod
    def failed(cls, kind: str, message: str) -> 'MeasureResult':
        return cls(failure=MeasureFailure(kind=kind, message=message))

    @property
    def ok(self) -> bool:
        return self.failure is None

    @property
    def status(self) -> str:
        return 'ok' if self.ok else f"failed:{self.failure.kind}"


@dataclass(frozen=True)
class MeasureDescriptor:
    id: str
    abbreviation: str
    family: str
    orientation: str
    preprocessing: Tuple[str, ...]
    hyperparams: Dict[str, float] = field(default_factory=dict, hash=False)
    requires_equal_n: bool = True
    seeded: bool = False
    symmetric: bool = True
    func: Optional[Callable[..., float]] = field(default=None, compare=False, repr=False, hash=False)

    def orient(self, value: float) -> float:
        """Map a raw value onto the 'higher = more similar' scale."""
        return value if self.orientation == SIMILARITY else -value

    def __call__(self, R, R_prime, **params) -> float:
        return self.func(R, R_prime, **params)


_REGISTRY: Dict[str, MeasureDescriptor] = {}


def _validated(value: Any, name: str) -> np.ndarray:
    matrix = as_matrix(value)
    is_valid, error_msg = validate_matrix(matrix, min_rows=2)
    if not is_valid:
        raise MeasureError(UNDEFINED_INPUT, f"{name}: {error_msg}")
    return matrix


def register_measure(
    measure_id: str,
    abbreviation: str,
    family: str,
    orientation: str,
    preprocessing: Tuple[str, ...] = (),
    hyperparams: Optional[Dict[str, float]] = None,
    requires_equal_n: bool = True,
    seeded: bool = False,
    symmetric: bool = True,
):
    """Decorator registering a measure kernel `f(X, Y, **hyperparams) -> float`.

    Args:
        measure_id: Unique registry key
        abbreviation: Short name used in report tables
        family: One of FAMILIES
        orientation: 'similarity' or 'distance'
        preprocessing: Ordered step names applied to both inputs
        hyperparams: Default hyperparameters (overridable per call)
        requires_equal_n: Whether both inputs must share the instance count
        seeded: Whether the kernel takes a `seed` keyword
        symmetric: Whether m(R, R') = m(R', R)
    """
    if family not in FAMILIES:
        raise ValueError(f"Unknown measure family: {family}")
    if orientation not in (SIMILARITY, DISTANCE):
        raise ValueError(f"Unknown orientation: {orientation}")
    for step in preprocessing:
        if step not in PREPROCESSING_STEPS:
            raise ValueError(f"Unknown preprocessing step: {step}")
    defaults = dict(hyperparams or {})

    def decorator(kernel: Callable[..., float]) -> Callable[..., float]:
        @wraps(kernel)
        def measure(R, R_prime, **params) -> float:
            X = _validated(R, 'left input')
            Y = _validated(R_prime, 'right input')
            if requires_equal_n and X.shape[0] != Y.shape[0]:
                raise MeasureError(
                    DIMENSION_MISMATCH,
                    f"{measure_id} needs the same instances, got N={X.shape[0]} and N={Y.shape[0]}"
                )

            seed = params.pop('seed', None)
            unknown = set(params) - set(defaults)
            if unknown:
                raise TypeError(f"{measure_id} got unexpected hyperparameters: {sorted(unknown)}")
            merged = {**defaults, **params}
            if seeded:
                merged['seed'] = 0 if seed is None else int(seed)

            X = apply_preprocessing(X, preprocessing)
            Y = apply_preprocessing(Y, preprocessing)
            logger.debug(f"{measure_id}: shapes {X.shape} vs {Y.shape}, params {merged}")
            return float(kernel(X, Y, **merged))

        if measure_id in _REGISTRY:
            raise ValueError(f"Measure id already registered: {measure_id}")
        _REGISTRY[measure_id] = MeasureDescriptor(
            id=measure_id,
            abbreviation=abbreviation,
            family=family,
            orientation=orientation,
            preprocessing=tuple(preprocessing),
            hyperparams=defaults,
            requires_equal_n=requires_equal_n,
            seeded=seeded,
            symmetric=symmetric,
            func=measure,
        )
        return measure

    return decorator


def get_measure(measure_id: str) -> MeasureDescriptor:
    """Look up a registered measure.

    Args:
        measure_id: Registry key

    Returns:
        MeasureDescriptor
    """
    try:
        return _REGISTRY[measure_id]
    except KeyError:
        raise KeyError(f"Unknown measure: {measure_id}. Known measures: {', '.join(sorted(_REGISTRY))}")


def list_measures() -> list[MeasureDescriptor]:
    """All registered measures in canonical (id) order."""
    return [_REGISTRY[key] for key in sorted(_REGISTRY)]


def compute_measure(
    measure_id: str,
    R,
    R_prime,
    seed: Optional[int] = None,
    cache: Optional[ResultCache] = result_cache,
    collector: MetricsCollector = metrics_collector,
    **params
) -> MeasureResult:
    """Evaluate a measure without ever raising on numerical trouble.

    Args:
        measure_id: Registry key
        R: Left representation (Representation or matrix)
        R_prime: Right representation
        seed: Seed for stochastic measures (ignored by deterministic ones)
        cache: Result cache, or None to bypass caching
        collector: Metrics collector
        **params: Hyperparameter overrides

    Returns:
        MeasureResult
    """
    descriptor = get_measure(measure_id)
    call_params = dict(params)
    if descriptor.seeded:
        call_params['seed'] = 0 if seed is None else int(seed)

    key = None
    if cache is not None and cache.enabled:
        try:
            key = hash_arrays(measure_id, sorted(call_params.items()), as_matrix(R), as_matrix(R_prime))
        except MeasureError:
            key = None
    if key is not None:
        cached = cache.get(key)
        if cached is not None:
            collector.record_measure(measure_id, 0.0, cached=True)
            return cached

    start_time = time.time()
    try:
        result = MeasureResult.success(descriptor.func(R, R_prime, **call_params))
    except MeasureError as e:
        result = MeasureResult.failed(e.kind, e.message)
    except np.linalg.LinAlgError as e:
        result = MeasureResult.failed(NUMERICAL, f"Linear algebra failure: {e}")
    except (ValueError, FloatingPointError, ZeroDivisionError) as e:
        result = MeasureResult.failed(NUMERICAL, str(e))
    except TypeError:
        raise
    except Exception as e:
        logger.error(f"Unexpected error in {measure_id}: {e}")
        logger.debug(traceback.format_exc())
        result = MeasureResult.failed(NUMERICAL, f"{type(e).__name__}: {e}")

    collector.record_measure(measure_id, time.time() - start_time)
    if not result.ok:
        collector.record_failure(measure_id, result.failure.kind)
        logger.debug(f"{measure_id} failed: {result.status} ({result.failure.message})")

    if key is not None:
        cache.set(key, result)
    return result
