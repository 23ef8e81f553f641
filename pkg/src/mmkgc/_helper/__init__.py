"""Helper functions and classes to make life easier. Mainly for internal use within the package."""

import logging

from .config_loader import Config, Scenario, TiePolicy, load_config, parse_overrides, validate_config, write_config
from .nice_logger import ColoredFormatter, SuccessLogger, attach_file_handler

logger = logging.getLogger(__name__)

__all__ = [
    "ColoredFormatter",
    "Config",
    "Scenario",
    "SuccessLogger",
    "TiePolicy",
    "attach_file_handler",
    "load_config",
    "parse_overrides",
    "validate_config",
    "write_config",
]
