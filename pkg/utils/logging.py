"""
Logging for ScatterLab.

One application logger named after the app. Console output goes to stderr so
the tables printed by the CLI stay clean on stdout. Python warnings raised by
the solvers (near-boundary evaluation, ill-conditioning) are routed through
the same handlers. Each forward or imaging run also writes ``run.log`` next
to its artifacts.
"""
import logging
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, Optional, TextIO

from config.settings import settings

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
RUN_LOG_NAME = "run.log"


def _level(level: str) -> int:
    return getattr(logging, str(level).upper(), logging.INFO)


def setup_logging(
    level: str = "INFO",
    log_file: Optional[str] = None,
    console_output: bool = True,
    stream: Optional[TextIO] = None,
) -> logging.Logger:
    """
    Configure the application logger and the ``py.warnings`` logger.

    Args:
        level: Logging level name (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_file: Optional file name inside LOGS_DIRECTORY
        console_output: Whether to log to the console
        stream: Console stream, stderr by default

    Returns:
        The application logger
    """
    formatter = logging.Formatter(LOG_FORMAT)
    handlers = []
    if console_output:
        console_handler = logging.StreamHandler(stream or sys.stderr)
        console_handler.setFormatter(formatter)
        handlers.append(console_handler)
    if log_file:
        logs_dir = Path(settings.app.logs_directory)
        logs_dir.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(logs_dir / log_file, encoding='utf-8')
        file_handler.setFormatter(formatter)
        handlers.append(file_handler)

    app_logger = logging.getLogger(settings.app.name)
    warnings_logger = logging.getLogger("py.warnings")
    for target in (app_logger, warnings_logger):
        target.setLevel(_level(level))
        for handler in list(target.handlers):
            target.removeHandler(handler)
            handler.close()
        for handler in handlers:
            target.addHandler(handler)
        target.propagate = False
    logging.captureWarnings(True)
    return app_logger


def set_level(level: str) -> None:
    """Change the verbosity of the application logger and its handlers."""
    logger.setLevel(_level(level))
    logging.getLogger("py.warnings").setLevel(_level(level))


@contextmanager
def run_log(directory) -> Iterator[Path]:
    """Copy every record of the enclosed run into ``directory/run.log``."""
    path = Path(directory) / RUN_LOG_NAME
    path.parent.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(path, mode="w", encoding='utf-8')
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    warnings_logger = logging.getLogger("py.warnings")
    logger.addHandler(handler)
    warnings_logger.addHandler(handler)
    try:
        yield path
    finally:
        logger.removeHandler(handler)
        warnings_logger.removeHandler(handler)
        handler.close()


logger = setup_logging(
    level=settings.app.log_level,
    log_file=settings.app.log_file or None,
)
