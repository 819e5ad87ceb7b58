import logging
import sys

import structlog

from app.core.constants import ENV_DEBUG, LOG_LEVEL_DEBUG, LOG_LEVEL_INFO


def configure_logging(env: str = "prod", level: str | None = None) -> None:
    """
    Configure structlog for JSON output on stderr.

    Args:
        env: deployment environment; "debug" lowers the threshold to DEBUG
        level: explicit level name overriding the environment default
    """
    if level is None:
        level = LOG_LEVEL_DEBUG if env.lower() == ENV_DEBUG else LOG_LEVEL_INFO

    structlog.configure(
        processors=[
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.add_log_level,
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.JSONRenderer(),
        ],
        wrapper_class=structlog.make_filtering_bound_logger(
            logging.getLevelName(level.upper())
        ),
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False,
    )
