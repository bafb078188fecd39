"""Logging configuration and utilities."""

import logging
import sys
from logging.handlers import RotatingFileHandler

from app.config.settings import settings


def setup_logger(
    name: str, log_level: int | str = logging.INFO, log_file: str = ""
) -> logging.Logger:
    """Configure logger with console and optional file handlers."""
    logger = logging.getLogger(name)
    logger.setLevel(log_level)
    logger.handlers.clear()

    # Formatter
    formatter = logging.Formatter(
        "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    )

    # Console handler
    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setLevel(log_level)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    # File handler
    if log_file:
        file_handler = RotatingFileHandler(
            log_file, maxBytes=10485760, backupCount=5  # 10MB
        )
        file_handler.setLevel(log_level)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    return logger


# Package logger: every module logger under "app" propagates here
logger = setup_logger("app", settings.log_level, settings.log_file)
