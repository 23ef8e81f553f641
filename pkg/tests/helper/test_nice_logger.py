"""Tests for the `nice_logger` module."""
import logging
from pathlib import Path
from typing import cast

from mmkgc._helper import ColoredFormatter, SuccessLogger, attach_file_handler
from mmkgc._helper.nice_logger import SUCCESS_LEVEL


def test_package_loggers_have_a_success_level() -> None:
    """Test that loggers below the package are `SuccessLogger`s."""
    logger = logging.getLogger("mmkgc.tests.success")

    assert isinstance(logger, SuccessLogger)
    assert logging.getLevelName(SUCCESS_LEVEL) == "SUCCESS"


def test_colored_formatter_leaves_the_record_alone() -> None:
    """Test that colouring a record does not change it for other handlers."""
    record = logging.LogRecord("mmkgc", logging.ERROR, __file__, 1, "broken", None, None)

    formatted = ColoredFormatter("%(levelname)s %(message)s").format(record)

    assert "ERROR" in formatted and "\033[" in formatted
    assert record.levelname == "ERROR"


def test_file_handler_mirrors_the_package_log(tmp_path: Path) -> None:
    """Test that `attach_file_handler` writes package records once per file."""
    path = tmp_path / "run.log"
    handler = attach_file_handler(str(path))
    try:
        assert handler is not None
        assert attach_file_handler(str(path)) is None

        cast(SuccessLogger, logging.getLogger("mmkgc.tests.file")).success("all done")
        handler.flush()

        assert "(SUCCESS): all done" in path.read_text(encoding="utf-8")
    finally:
        if handler is not None:
            logging.getLogger("mmkgc").removeHandler(handler)
            handler.close()
