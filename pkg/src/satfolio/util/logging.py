import os
import sys

from loguru import logger

_DEFAULT_LEVEL = os.getenv("SATFOLIO_LOG_LEVEL", "INFO")


def configure_logging(level: str | None = None):
    """Replaces loguru's default sink with a stderr sink at the requested level"""
    logger.remove()
    logger.add(sys.stderr, level=(level or _DEFAULT_LEVEL).upper())
