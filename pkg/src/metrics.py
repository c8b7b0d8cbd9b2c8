"""
Run statistics for benchmark monitoring.

Timing data is logged only; it never enters report files.
"""

import threading
import time
from collections import defaultdict
from typing import Any, Dict

from src.config import ENABLE_METRICS
from src.logger import logger


class MetricsCollector:
    """Simple in-memory collector of measure evaluations."""

    def __init__(self, enabled: bool = ENABLE_METRICS):
        """Initialize metrics collector."""
        self.enabled = enabled
        self._lock = threading.Lock()
        self.reset()

    def record_measure(self, measure_id: str, duration: float, cached: bool = False):
        """Record one measure evaluation.

        Args:
            measure_id: Registered measure id
            duration: Wall time in seconds
            cached: Whether the result came from the cache
        """
        if not self.enabled:
            return

        with self._lock:
            self.measure_count += 1
            if cached:
                self.cache_hits += 1
                return
            self.cache_misses += 1
            self.measure_times[measure_id] += duration
            self.measure_calls[measure_id] += 1

    def record_failure(self, measure_id: str, kind: str):
        """Record a failed measure evaluation.

        Args:
            measure_id: Registered measure id
            kind: Failure kind
        """
        if not self.enabled:
            return

        with self._lock:
            self.failure_count += 1
            self.failure_kinds[kind] += 1
            self.failures_by_measure[measure_id] += 1

    def get_stats(self) -> Dict[str, Any]:
        """Get current statistics.

        Returns:
            Dictionary with metrics
        """
        if not self.enabled:
            return {'enabled': False}

        with self._lock:
            mean_times = {
                measure_id: self.measure_times[measure_id] / calls
                for measure_id, calls in sorted(self.measure_calls.items())
            }
            lookups = self.cache_hits + self.cache_misses
            return {
                'enabled': True,
                'elapsed_seconds': round(time.time() - self.start_time, 3),
                'measure_count': self.measure_count,
                'failure_count': self.failure_count,
                'cache_hits': self.cache_hits,
                'cache_misses': self.cache_misses,
                'cache_hit_rate': self.cache_hits / lookups if lookups > 0 else 0,
                'mean_seconds_per_measure': mean_times,
                'failure_kinds': dict(self.failure_kinds),
                'failures_by_measure': dict(self.failures_by_measure),
            }

    def log_summary(self):
        """Log the collected statistics."""
        stats = self.get_stats()
        if not stats['enabled']:
            return
        logger.info(
            f"Evaluated {stats['measure_count']} measure pairs in {stats['elapsed_seconds']}s "
            f"({stats['cache_hits']} cached, {stats['failure_count']} failed)"
        )
        slowest = sorted(stats['mean_seconds_per_measure'].items(), key=lambda kv: -kv[1])[:3]
        for measure_id, seconds in slowest:
            logger.info(f"  {measure_id}: {seconds:.4f}s per pair")
        if stats['failure_kinds']:
            logger.info(f"Failure kinds: {stats['failure_kinds']}")

    def reset(self):
        """Reset all metrics."""
        self.measure_count = 0
        self.failure_count = 0
        self.cache_hits = 0
        self.cache_misses = 0
        self.measure_times = defaultdict(float)
        self.measure_calls = defaultdict(int)
        self.failure_kinds = defaultdict(int)
        self.failures_by_measure = defaultdict(int)
        self.start_time = time.time()


# Global metrics collector
metrics_collector = MetricsCollector()
