"""
Structured logging for the symbol analysis toolkit.

Reports go to stdout or files, so diagnostics are rendered on stderr.
"""

import logging
import sys
from typing import Optional

import structlog

from app.config.settings import settings

DEFAULT_LOGGER = "dirichlet_symbol_lab"

_configured = False


def configure_logging(level: Optional[str] = None) -> None:
    """
    Route structlog through the standard library as JSON lines on stderr.

    Args:
        level: Level name; defaults to DSL_LOG_LEVEL
    """
    global _configured
    level_name = (level or settings.log_level).upper()

    logging.basicConfig(
        format="%(message)s",
        stream=sys.stderr,
        level=getattr(logging, level_name, logging.WARNING),
    )
    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.stdlib.PositionalArgumentsFormatter(),
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.UnicodeDecoder(),
            structlog.processors.JSONRenderer(),
        ],
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )
    _configured = True


def get_logger(name: Optional[str] = None) -> structlog.BoundLogger:
    """Structured logger for a module, configuring logging on first use."""
    if not _configured:
        configure_logging()
    return structlog.get_logger(name or DEFAULT_LOGGER)


logger = get_logger()
