"""
Some basic functions for logging and error reporting
"""
import sys
import traceback
import logging
import logging.handlers as handlers
from pathlib import Path
from typing import TextIO

from rich.console import Console
from rich.logging import RichHandler

MAX_LOG_SIZE = 100 * 1024 * 1024
"""Maximal log size. After exceeding the limit, will be updated according rolling strategy.
"""

logger = logging.getLogger("posikit")
"""
Default posikit logger
"""

LOG_LEVELS = {
    "DEBUG": logging.DEBUG,
    "INFO": logging.INFO,
    "WARN": logging.WARNING,
    "WARNING": logging.WARNING,
    "ERROR": logging.ERROR,
}


def init_logger(
    file_path: Path | str | None = None,
    use_rich: bool = True,
    remove_other_handlers: bool = True,
    log_level: str = "INFO",
    logger_to_init: logging.Logger | None = None,
    stream: TextIO | None = None,
) -> logging.Logger:
    """
    Makes a logger for the toolbox.
    Logs never go to stdout: reports are written there and must stay parseable.

    Args:
        file_path (Path | str | None): if set, creates a file with logs, defaults to None
        use_rich (bool): if set, will use rich colors in logs, defaults to True
        remove_other_handlers (bool): if set, will delete all other handlers of the logger, defaults to True
        log_level (str): logging level, one of DEBUG, INFO, WARNING, ERROR
        logger_to_init (logging.Logger | None): logger to init. If not set, will use default logger
        stream (TextIO | None): stream for console logs, defaults to stderr
    Returns:
        (logging.Logger): logger
    """
    logger_to_init = logger_to_init or logger
    if log_level.upper() not in LOG_LEVELS:
        raise ValueError(f'unknown log level: {log_level}')
    if remove_other_handlers:
        logger_to_init.handlers.clear()
    stream = stream or sys.stderr
    log_format = "[%(thread)d] %(asctime)s | %(message)s"
    formatter = logging.Formatter(log_format)
    if file_path is not None:
        file_handler = handlers.RotatingFileHandler(file_path,
                                                    maxBytes=MAX_LOG_SIZE)
        file_handler.setFormatter(formatter)
        logger_to_init.addHandler(file_handler)
    if use_rich:
        stream_handler = RichHandler(console=Console(file=stream))
    else:
        stream_handler = logging.StreamHandler(stream)
    stream_handler.setFormatter(formatter)
    logger_to_init.addHandler(stream_handler)
    logger_to_init.setLevel(LOG_LEVELS[log_level.upper()])
    logger_to_init.propagate = False
    return logger_to_init


def get_traceback(e: Exception) -> str:
    """
    Simple helper for getting traceback from exception

    Args:
        e (Exception): exception to get traceback

    Returns:
        str: string with traceback
    """
    return "".join(traceback.TracebackException.from_exception(e).format())
