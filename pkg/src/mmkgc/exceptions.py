"""Base exceptions for `mmkgc`. Every error that can reach the CLI carries a stable exit code."""


class MmkgcError(Exception):
    """Base class for all `mmkgc` errors."""

    exit_code: int = 1
    """The process exit code used when this error reaches `mmkgc.cli.cli_main`."""


class ConfigError(MmkgcError):
    """A configuration key or value is invalid."""

    exit_code = 2


class DataError(MmkgcError):
    """A dataset file could not be loaded or failed validation."""

    exit_code = 3


class CompatibilityError(MmkgcError):
    """A checkpoint does not match the model or dataset it is loaded against."""

    exit_code = 4


class GradientCheckError(MmkgcError):
    """The analytic gradients disagree with finite differences."""

    exit_code = 5
