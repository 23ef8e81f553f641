"""Logging features for training runs: a "success" level, colored console output and a plain file format."""

import copy
import logging
import os
from typing import Any, Optional

BLACK, RED, GREEN, YELLOW, BLUE, MAGENTA, CYAN, WHITE = range(8)

COLORS = {
    "WARNING": YELLOW,
    "INFO": WHITE,
    "DEBUG": BLUE,
    "CRITICAL": YELLOW,
    "ERROR": RED,
    "SUCCESS": GREEN,
}

RESET_SEQ = "\033[0m"
COLOR_SEQ = "\033[1;%dm"

SUCCESS_LEVEL = 25

PACKAGE_FORMAT = "[%(name)s] (%(levelname)s): %(message)s"
FILE_FORMAT = "%(asctime)s [%(name)s] (%(levelname)s): %(message)s"


class ColoredFormatter(logging.Formatter):
    """A logging formatter which enables ANSI colors for each log level."""

    def format(self, record: logging.LogRecord) -> str:
        """Formats the `record`, ensuring coloured output.

        Args:
            record (logging.LogRecord): The log record to format

        Returns:
            str: The formatted log record
        """
        new_record = copy.copy(record)  # the original record is shared with other handlers

        levelname = new_record.levelname
        if levelname in COLORS:
            new_record.levelname = COLOR_SEQ % (30 + COLORS[levelname]) + levelname + RESET_SEQ
        return super().format(new_record)


class SuccessLogger(logging.Logger):
    """A logger which provides a `success` level - good to use with a `ColoredFormatter`."""

    def __init__(self, name: str, **kwargs: Any) -> None:
        """Initialises a `SuccessLogger`.

        Args:
            name (str): The name of the logger
        """
        super().__init__(name, **kwargs)

        logging.addLevelName(SUCCESS_LEVEL, "SUCCESS")

    def success(self, msg: str, *args: Any, **kwargs: Any) -> None:
        """Log a finished unit of work (a completed run, a passed self-check).

        Args:
            msg (str): The message to log
        """
        if self.isEnabledFor(SUCCESS_LEVEL):
            self._log(SUCCESS_LEVEL, msg, args, **kwargs)


def attach_file_handler(path: str, logger_name: str = "mmkgc") -> Optional[logging.Handler]:
    """Mirror the package log into a plain-text file.

    Args:
        path (str): The file to write to (truncated)
        logger_name (str, optional): The logger to attach to. Defaults to the package logger.

    Returns:
        Optional[logging.Handler]: The new handler, or `None` if one for `path` already exists
    """
    target = logging.getLogger(logger_name)
    for handler in target.handlers:
        if isinstance(handler, logging.FileHandler) and handler.baseFilename == os.path.abspath(path):
            return None

    handler = logging.FileHandler(path, mode="w", encoding="utf-8")
    handler.setFormatter(logging.Formatter(FILE_FORMAT))
    target.addHandler(handler)
    return handler
