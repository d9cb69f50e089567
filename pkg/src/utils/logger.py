"""
Logging Setup
Satu handler stream untuk seluruh aplikasi; modul library cukup memanggil get_logger.
"""

import logging
import sys

from utils.constants import LOG_FORMAT, LOG_DATE_FORMAT, LOGGER_ROOT


def get_logger(name: str) -> logging.Logger:
    """Kembalikan logger modul di bawah namespace aplikasi."""
    if name.startswith(LOGGER_ROOT):
        return logging.getLogger(name)
    return logging.getLogger(f"{LOGGER_ROOT}.{name}")


def setup_logging(verbose: int = 0) -> logging.Logger:
    """
    Pasang handler stderr pada root logger aplikasi.

    Args:
        verbose: 0 = WARNING, 1 = INFO, 2+ = DEBUG

    Returns:
        The application root logger
    """
    level = logging.WARNING
    if verbose == 1:
        level = logging.INFO
    elif verbose >= 2:
        level = logging.DEBUG

    root = logging.getLogger(LOGGER_ROOT)
    root.setLevel(level)

    # Jangan dobel handler kalau dipanggil berulang (tes CLI)
    for handler in list(root.handlers):
        root.removeHandler(handler)

    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT, LOG_DATE_FORMAT))
    root.addHandler(handler)
    root.propagate = False
    return root
