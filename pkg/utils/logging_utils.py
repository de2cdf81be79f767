# app/utils/logging_utils.py

import logging

from domain.settings import get_settings

LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'


def get_logger(name: str) -> logging.Logger:
    """
    Returns a module logger with a single console handler attached.

    Args:
        name (str): Usually the calling module's ``__name__``.

    Returns:
        logging.Logger: The configured logger.
    """
    logger = logging.getLogger(name)
    logger.setLevel(get_settings().log_level.upper())
    # Basic console handler
    if not logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logger.addHandler(handler)
    return logger
