"""Tests for logger setup."""

import logging
from logging.handlers import RotatingFileHandler

from app.utils.logger import setup_logger


class TestSetupLogger:
    """Test suite for setup_logger."""

    def test_console_only(self):
        """Test that a logger without a file has one stdout handler."""
        logger = setup_logger("bct.test.console", "DEBUG")
        assert logger.level == logging.DEBUG
        assert len(logger.handlers) == 1

    def test_rotating_file(self, tmp_path):
        """Test that a log file adds a rotating handler."""
        log_file = tmp_path / "bct.log"
        logger = setup_logger("bct.test.file", logging.INFO, str(log_file))
        assert any(isinstance(h, RotatingFileHandler) for h in logger.handlers)
        logger.info("rate sweep started")
        for handler in logger.handlers:
            handler.flush()
        assert "rate sweep started" in log_file.read_text()

    def test_repeated_setup_does_not_duplicate_handlers(self):
        """Test that calling setup twice replaces the handlers."""
        setup_logger("bct.test.repeat")
        logger = setup_logger("bct.test.repeat")
        assert len(logger.handlers) == 1
