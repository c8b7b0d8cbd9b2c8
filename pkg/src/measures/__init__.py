"""
Representational similarity measures.

Importing this package registers all built-in measures.
"""

from src.measures.registry import (
    DISTANCE, FAMILIES, SIMILARITY, MeasureDescriptor, MeasureFailure, MeasureResult,
    compute_measure, get_measure, list_measures, register_measure
)
from src.measures.alignment import (
    aligned_cosine, angular_shape, hard_corr_match, linreg_r2, orth_procrustes, perm_procrustes,
    procrustes_size_shape, soft_corr_match
)
from src.measures.rsm import cka_linear, dist_corr, eigenspace_overlap, gulp, rsa, rsm_norm_diff
from src.measures.cca import CcaSolution, cca_core, pwcca, svcca
from src.measures.neighbors import jaccard_knn, rank_sim, second_order_cosine
from src.measures.stats import concentricity_diff, magnitude_diff, uniformity_diff
from src.measures.topology import HeatTraceDescriptor, heat_trace, imd

__all__ = [
    'DISTANCE', 'FAMILIES', 'SIMILARITY',
    'MeasureDescriptor', 'MeasureFailure', 'MeasureResult',
    'compute_measure', 'get_measure', 'list_measures', 'register_measure',
    'aligned_cosine', 'angular_shape', 'hard_corr_match', 'linreg_r2', 'orth_procrustes',
    'perm_procrustes', 'procrustes_size_shape', 'soft_corr_match',
    'cka_linear', 'dist_corr', 'eigenspace_overlap', 'gulp', 'rsa', 'rsm_norm_diff',
    'CcaSolution', 'cca_core', 'pwcca', 'svcca',
    'jaccard_knn', 'rank_sim', 'second_order_cosine',
    'concentricity_diff', 'magnitude_diff', 'uniformity_diff',
    'HeatTraceDescriptor', 'heat_trace', 'imd',
]
