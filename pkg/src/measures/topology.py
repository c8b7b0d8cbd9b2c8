"""
Topology measure: IMD, a multi-scale comparison of heat-kernel traces of
k-NN graphs built on the two instance clouds.

Heat traces tr(exp(-tL)) of the normalized graph Laplacian are computed
exactly from the dense spectrum for small graphs, or estimated by stochastic
Lanczos quadrature (SLQ) with Rademacher probes for large ones.
"""

from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np
from scipy import sparse
from scipy.linalg import eigh_tridiagonal
from scipy.spatial import cKDTree

from src.config import (
    IMD_EXACT_MAX_N, IMD_GRAPH_K, IMD_LANCZOS_STEPS, IMD_PROBES, IMD_REPEATS, IMD_T_MAX,
    IMD_T_MIN, IMD_T_POINTS
)
from src.logger import logger
from src.measures.registry import DISTANCE, register_measure
from src.utils import MeasureError, NUMERICAL, UNDEFINED_INPUT

HEAT_TRACE_METHODS = ('auto', 'exact', 'slq')

# Probes processed together in one block Lanczos sweep
PROBE_BATCH = 64

# Lanczos residual norms below this end the Krylov sequence of a probe
BREAKDOWN_TOL = 1e-12


@dataclass(frozen=True)
class HeatTraceDescriptor:
    """Heat-kernel traces of one representation's k-NN graph on a t-grid."""

    t_grid: np.ndarray
    traces: np.ndarray
    seed: int
    params: Dict[str, int] = field(default_factory=dict, hash=False)
    method: str = 'exact'

    @property
    def n_vertices(self) -> int:
        return int(self.params.get('n_vertices', 0))


def default_t_grid(
    points: int = IMD_T_POINTS, t_min: float = IMD_T_MIN, t_max: float = IMD_T_MAX
) -> np.ndarray:
    """Log-spaced diffusion times."""
    if points < 1 or not 0 < t_min <= t_max:
        raise ValueError(f"Invalid t-grid: {points} points in [{t_min}, {t_max}]")
    return np.logspace(np.log10(t_min), np.log10(t_max), int(points))


def knn_graph(R: np.ndarray, graph_k: int = IMD_GRAPH_K) -> sparse.csr_matrix:
    """Symmetrized, unweighted Euclidean k-NN adjacency matrix.

    Args:
        R: N x D matrix with N > graph_k
        graph_k: Neighbors per vertex before symmetrization

    Returns:
        N x N sparse 0/1 adjacency without self-loops
    """
    R = np.asarray(R, dtype=np.float64)
    n = R.shape[0]
    if graph_k < 1:
        raise ValueError(f"graph_k must be positive, got {graph_k}")
    if n <= graph_k:
        raise MeasureError(UNDEFINED_INPUT, f"Need more than graph_k={graph_k} instances, got {n}")

    _, neighbors = cKDTree(R).query(R, k=graph_k + 1)
    rows = []
    cols = []
    for i in range(n):
        # duplicated points may push i itself out of its own query result
        others = [int(j) for j in neighbors[i] if j != i][:graph_k]
        rows.extend([i] * len(others))
        cols.extend(others)

    A = sparse.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n)).tocsr()
    A = A.maximum(A.T)
    A.data[:] = 1.0
    return A


def normalized_laplacian(A: sparse.spmatrix) -> sparse.csr_matrix:
    """L = I_nonisolated - D^{-1/2} A D^{-1/2}; isolated vertices get a zero row."""
    degrees = np.asarray(A.sum(axis=1)).ravel()
    inv_sqrt = np.zeros_like(degrees)
    connected = degrees > 0
    inv_sqrt[connected] = 1.0 / np.sqrt(degrees[connected])
    scaling = sparse.diags(inv_sqrt)
    return (sparse.diags(connected.astype(np.float64)) - scaling @ A @ scaling).tocsr()


def exact_heat_traces(L: sparse.spmatrix, t_grid: np.ndarray) -> np.ndarray:
    """tr(exp(-tL)) from the full spectrum of L."""
    try:
        eigenvalues = np.linalg.eigvalsh(L.toarray())
    except np.linalg.LinAlgError as e:
        raise MeasureError(NUMERICAL, f"Laplacian eigendecomposition failed: {e}")
    eigenvalues = np.clip(eigenvalues, 0.0, 2.0)
    return np.exp(-np.outer(t_grid, eigenvalues)).sum(axis=1)


def _lanczos_block(L: sparse.spmatrix, V: np.ndarray, steps: int):
    """Independent Lanczos runs for the columns of V with full reorthogonalization.

    Returns:
        (alphas, betas): steps x b diagonals and (steps - 1) x b off-diagonals
    """
    n, b = V.shape
    Q = np.zeros((steps, n, b))
    alphas = np.zeros((steps, b))
    betas = np.zeros((max(steps - 1, 0), b))

    q = V / np.linalg.norm(V, axis=0)
    Q[0] = q
    for i in range(steps):
        w = L @ q
        alphas[i] = np.sum(q * w, axis=0)
        if i == steps - 1:
            break
        w = w - alphas[i] * q
        if i > 0:
            w = w - betas[i - 1] * Q[i - 1]
        coeffs = np.einsum('jnb,nb->jb', Q[:i + 1], w)
        w = w - np.einsum('jnb,jb->nb', Q[:i + 1], coeffs)

        norms = np.linalg.norm(w, axis=0)
        alive = norms > BREAKDOWN_TOL
        betas[i] = np.where(alive, norms, 0.0)
        q = np.divide(w, norms, out=np.zeros_like(w), where=alive)
        Q[i + 1] = q
    return alphas, betas


def slq_heat_traces(
    L: sparse.spmatrix,
    t_grid: np.ndarray,
    lanczos_steps: int = IMD_LANCZOS_STEPS,
    probes: int = IMD_PROBES,
    repeats: int = IMD_REPEATS,
    seed: int = 0,
) -> np.ndarray:
    """Estimate tr(exp(-tL)) by stochastic Lanczos quadrature.

    Each Rademacher probe v gives v^T f(L) v ~= N * sum_j tau_j^2 f(theta_j),
    with Ritz values theta_j and first eigenvector components tau_j of the
    Lanczos tridiagonal matrix. Probe means are averaged over repeats.
    """
    if lanczos_steps < 1 or probes < 1 or repeats < 1:
        raise ValueError(
            f"SLQ needs positive lanczos_steps, probes and repeats, got "
            f"{lanczos_steps}, {probes}, {repeats}"
        )
    n = L.shape[0]
    steps = min(int(lanczos_steps), n)
    rng = np.random.default_rng(seed)

    estimates = np.zeros((int(repeats), t_grid.size))
    for repeat in range(int(repeats)):
        total = np.zeros(t_grid.size)
        remaining = int(probes)
        while remaining > 0:
            batch = min(PROBE_BATCH, remaining)
            V = rng.integers(0, 2, size=(n, batch)).astype(np.float64) * 2.0 - 1.0
            alphas, betas = _lanczos_block(L, V, steps)
            for c in range(batch):
                try:
                    theta, Y = eigh_tridiagonal(alphas[:, c], betas[:, c])
                except np.linalg.LinAlgError as e:
                    raise MeasureError(NUMERICAL, f"Tridiagonal eigensolver failed: {e}")
                weights = Y[0] ** 2
                total += np.exp(-np.outer(t_grid, np.clip(theta, 0.0, 2.0))) @ weights
            remaining -= batch
        estimates[repeat] = n * total / probes
    return estimates.mean(axis=0)


def heat_trace(
    R: np.ndarray,
    graph_k: int = IMD_GRAPH_K,
    lanczos_steps: int = IMD_LANCZOS_STEPS,
    probes: int = IMD_PROBES,
    repeats: int = IMD_REPEATS,
    seed: int = 0,
    method: str = 'auto',
    t_grid: Optional[np.ndarray] = None,
) -> HeatTraceDescriptor:
    """Heat-trace descriptor of the k-NN graph of R.

    Args:
        R: N x D matrix with N > graph_k
        graph_k: k of the k-NN graph
        lanczos_steps: Lanczos iterations per probe
        probes: Rademacher probes per repeat
        repeats: Independent SLQ estimates averaged
        seed: Seed of the probe generator
        method: 'exact', 'slq', or 'auto' (exact up to IMD_EXACT_MAX_N vertices)
        t_grid: Diffusion times, defaults to the configured log grid

    Returns:
        HeatTraceDescriptor
    """
    if method not in HEAT_TRACE_METHODS:
        raise ValueError(f"Unknown heat trace method: {method}. Choose from {HEAT_TRACE_METHODS}")
    graph_k = int(graph_k)
    grid = default_t_grid() if t_grid is None else np.array(t_grid, dtype=np.float64)

    L = normalized_laplacian(knn_graph(R, graph_k))
    n = L.shape[0]
    resolved = method
    if method == 'auto':
        # exact spectra are cubic in n; beyond IMD_EXACT_MAX_N only sparse products stay affordable
        resolved = 'exact' if n <= IMD_EXACT_MAX_N else 'slq'

    if resolved == 'exact':
        traces = exact_heat_traces(L, grid)
    else:
        traces = slq_heat_traces(L, grid, lanczos_steps, probes, repeats, seed)
    if not np.all(np.isfinite(traces)):
        raise MeasureError(NUMERICAL, "Heat trace estimate is not finite")

    logger.debug(f"Heat traces ({resolved}) for {n} vertices, graph_k={graph_k}")
    params = {
        'graph_k': graph_k,
        'lanczos_steps': int(lanczos_steps),
        'probes': int(probes),
        'repeats': int(repeats),
        'n_vertices': n,
    }
    grid.setflags(write=False)
    traces.setflags(write=False)
    return HeatTraceDescriptor(t_grid=grid, traces=traces, seed=int(seed), params=params, method=resolved)


def imd_from_descriptors(left: HeatTraceDescriptor, right: HeatTraceDescriptor) -> float:
    """sup_t exp(-2(t + 1/t)) |h_left(t) - h_right(t)| over a shared t-grid."""
    if left.t_grid.shape != right.t_grid.shape or not np.allclose(left.t_grid, right.t_grid):
        raise ValueError("Heat trace descriptors use different t-grids")
    t = left.t_grid
    weights = np.exp(-2.0 * (t + 1.0 / t))
    return float(np.max(weights * np.abs(left.traces - right.traces)))


@register_measure(
    'imd', 'IMD', 'topology', DISTANCE,
    hyperparams={
        'graph_k': IMD_GRAPH_K,
        'lanczos_steps': IMD_LANCZOS_STEPS,
        'probes': IMD_PROBES,
        'repeats': IMD_REPEATS,
        'method': 'auto',
    },
    requires_equal_n=False,
    seeded=True,
)
def imd(
    X: np.ndarray,
    Y: np.ndarray,
    graph_k: int = IMD_GRAPH_K,
    lanczos_steps: int = IMD_LANCZOS_STEPS,
    probes: int = IMD_PROBES,
    repeats: int = IMD_REPEATS,
    method: str = 'auto',
    seed: int = 0,
) -> float:
    """IMD score between the instance manifolds of X and Y."""
    options = dict(
        graph_k=graph_k, lanczos_steps=lanczos_steps, probes=probes, repeats=repeats,
        seed=seed, method=method,
    )
    return imd_from_descriptors(heat_trace(X, **options), heat_trace(Y, **options))
