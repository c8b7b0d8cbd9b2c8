"""
Logging configuration for library and CLI use.
"""

import logging
import sys
from pathlib import Path
from logging.handlers import RotatingFileHandler
from src.config import LOG_LEVEL, LOG_FILE, LOG_FORMAT


def setup_logger(name: str = 'resim', log_file: str = None) -> logging.Logger:
    """Setup logger with console and (optional) rotating file handlers.

    Args:
        name: Logger name
        log_file: Optional log file path (overrides config). An empty
            LOG_FILE setting disables file logging.

    Returns:
        Configured logger instance
    """
    logger = logging.getLogger(name)
    logger.setLevel(getattr(logging, LOG_LEVEL.upper()))
    logger.propagate = False

    # Remove existing handlers
    logger.handlers.clear()

    # Console handler on stderr; stdout carries command results
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(logging.INFO)
    console_handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logger.addHandler(console_handler)

    path = log_file if log_file is not None else LOG_FILE
    if not path:
        return logger

    # File handler with rotation
    log_path = Path(path)
    log_path.parent.mkdir(parents=True, exist_ok=True)

    file_handler = RotatingFileHandler(
        log_path,
        maxBytes=10 * 1024 * 1024,  # 10MB
        backupCount=5
    )
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logger.addHandler(file_handler)

    return logger


# Create default logger instance
logger = setup_logger()
