"""
Configuration management for benchmark runs.

Uses environment variables with sensible defaults. Run-level settings
(which tests, which measures) live in the TOML run file, see
`src.run_config`.
"""

import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Project paths
PROJECT_ROOT = Path(__file__).resolve().parent.parent
DEFAULT_OUT_DIR = Path(os.getenv('RESIM_OUT_DIR', str(PROJECT_ROOT / 'results')))

# Neighborhood measures (Jaccard, RankSim, 2nd-Cos)
K_NEIGHBORS = int(os.getenv('RESIM_K_NEIGHBORS', '10'))

# Statistic measures
UNIFORMITY_T = float(os.getenv('RESIM_UNIFORMITY_T', '2.0'))

# Spectral tolerances: singular values below RANK_TOL * sigma_max are dropped
RANK_TOL = float(os.getenv('RESIM_RANK_TOL', '1e-10'))
SVCCA_THRESHOLD = float(os.getenv('RESIM_SVCCA_THRESHOLD', '0.99'))
GULP_LAMBDA = float(os.getenv('RESIM_GULP_LAMBDA', '0.0'))

# IMD heat-trace estimation
# probes * lanczos_steps ~ 8,000 matrix-vector products per repetition
IMD_GRAPH_K = int(os.getenv('RESIM_IMD_GRAPH_K', '5'))
IMD_LANCZOS_STEPS = int(os.getenv('RESIM_IMD_LANCZOS_STEPS', '10'))
IMD_PROBES = int(os.getenv('RESIM_IMD_PROBES', '800'))
IMD_REPEATS = int(os.getenv('RESIM_IMD_REPEATS', '5'))
IMD_T_POINTS = int(os.getenv('RESIM_IMD_T_POINTS', '256'))
IMD_T_MIN = float(os.getenv('RESIM_IMD_T_MIN', '1e-2'))
IMD_T_MAX = float(os.getenv('RESIM_IMD_T_MAX', '1e2'))
# method='auto': dense eigendecomposition (cubic in N) up to this many vertices, SLQ above
IMD_EXACT_MAX_N = int(os.getenv('RESIM_IMD_EXACT_MAX_N', '1000'))

# Harness configuration
FAILURE_THRESHOLD = float(os.getenv('RESIM_FAILURE_THRESHOLD', '0.5'))
DEFAULT_JOBS = int(os.getenv('RESIM_JOBS', '-1'))  # -1 = all cores
DEFAULT_SEED = int(os.getenv('RESIM_SEED', '0'))

# Caching configuration
ENABLE_CACHE = os.getenv('ENABLE_CACHE', 'True').lower() == 'true'
CACHE_MAX_SIZE = int(os.getenv('CACHE_MAX_SIZE', '10000'))

# Monitoring configuration
ENABLE_METRICS = os.getenv('ENABLE_METRICS', 'True').lower() == 'true'

# Logging configuration
LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')
LOG_FILE = os.getenv('LOG_FILE', str(PROJECT_ROOT / 'logs' / 'resim.log'))
LOG_FORMAT = os.getenv('LOG_FORMAT', '%(asctime)s - %(name)s - %(levelname)s - %(message)s')
