"""
Caching layer for measure results.

Trained models are reused across tests (accuracy, output and layer tests
share the same models), so the same representation pair is often scored
more than once in a run.
"""

import threading
from typing import Any, Dict, Optional

from src.config import ENABLE_CACHE, CACHE_MAX_SIZE
from src.logger import logger


class ResultCache:
    """Bounded in-memory cache keyed by content hashes."""

    def __init__(self, max_size: int = CACHE_MAX_SIZE, enabled: bool = ENABLE_CACHE):
        """Initialize cache.

        Args:
            max_size: Maximum number of entries
            enabled: Whether lookups and stores are active
        """
        self.cache: Dict[str, Any] = {}
        self.max_size = max_size
        self.enabled = enabled
        self._lock = threading.Lock()

    def get(self, key: str) -> Optional[Any]:
        """Get cached value for key.

        Args:
            key: Content hash

        Returns:
            Cached value or None
        """
        if not self.enabled:
            return None

        with self._lock:
            value = self.cache.get(key)

        if value is not None:
            logger.debug(f"Cache hit for key {key[:12]}")
        return value

    def set(self, key: str, value: Any) -> None:
        """Cache value for key.

        Args:
            key: Content hash
            value: Value to cache
        """
        if not self.enabled:
            return

        with self._lock:
            # Evict oldest entry if at capacity (dicts keep insertion order)
            if key not in self.cache and len(self.cache) >= self.max_size:
                oldest_key = next(iter(self.cache))
                del self.cache[oldest_key]
                logger.debug("Evicted oldest cache entry")
            self.cache[key] = value

    def clear(self) -> None:
        """Clear all cache entries."""
        with self._lock:
            self.cache.clear()
        logger.info("Cache cleared")

    def stats(self) -> Dict[str, Any]:
        """Get cache statistics.

        Returns:
            Dictionary with cache stats
        """
        return {
            'enabled': self.enabled,
            'size': len(self.cache),
            'max_size': self.max_size,
        }


# Global cache instance
result_cache = ResultCache()
