"""
Logging utility for the hypersphere toolkit.
"""
import logging
import os
import sys
from datetime import datetime
from config.settings import config


class Logger:
    """Thin wrapper over the stdlib logger with domain helpers."""

    def __init__(self, name: str = "hypersphere"):
        self.name = name
        self.logger = logging.getLogger(name)
        self._setup_logger()

    def _setup_logger(self):
        """Setup logger configuration."""
        log_level = getattr(logging, config.LOG_LEVEL.upper(), logging.INFO)
        self.logger.setLevel(log_level)

        # Clear existing handlers
        self.logger.handlers.clear()

        formatter = logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
        )

        console_handler = logging.StreamHandler(sys.stdout)
        console_handler.setLevel(log_level)
        console_handler.setFormatter(formatter)
        self.logger.addHandler(console_handler)

        if config.LOG_TO_FILE:
            os.makedirs(config.LOG_DIR, exist_ok=True)
            log_file = os.path.join(config.LOG_DIR, f"hypersphere_{datetime.now().strftime('%Y%m%d')}.log")
            file_handler = logging.FileHandler(log_file)
            file_handler.setLevel(log_level)
            file_handler.setFormatter(formatter)
            self.logger.addHandler(file_handler)

        self.logger.propagate = False

    def info(self, message: str):
        """Log info message."""
        self.logger.info(message)

    def debug(self, message: str):
        """Log debug message."""
        self.logger.debug(message)

    def warning(self, message: str):
        """Log warning message."""
        self.logger.warning(message)

    def error(self, message: str):
        """Log error message."""
        self.logger.error(message)

    def critical(self, message: str):
        """Log critical message."""
        self.logger.critical(message)

    def log_iteration(self, iteration: int, loss: float, accuracy: float = None, scale: float = None):
        """Log training progress."""
        parts = [f"iter {iteration}", f"loss {loss:.6f}"]
        if accuracy is not None:
            parts.append(f"acc {accuracy:.4f}")
        if scale is not None:
            parts.append(f"s {scale:.4f}")
        self.info(" - ".join(parts))

    def log_check(self, check_name: str, passed: bool, detail: str = ""):
        """Log the outcome of a numeric check."""
        status = "PASS" if passed else "FAIL"
        message = f"[{status}] {check_name}"
        if detail:
            message = f"{message}: {detail}"
        if passed:
            self.info(message)
        else:
            self.error(message)

    def log_artifact(self, path: str):
        """Log a written output file."""
        self.info(f"Written artifact: {path}")


# Global logger instance
logger = Logger()
