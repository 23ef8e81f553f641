"""Dataset related exceptions."""

from typing import Sequence

from ..exceptions import DataError


class TripleParseError(DataError):
    """A triples file has a malformed line."""

    def __init__(self, path: str, line_number: int, message: str) -> None:
        """Initialise the error.

        Args:
            path (str): The file being parsed.
            line_number (int): The 1-based line number of the malformed line.
            message (str): What is wrong with the line.
        """
        super().__init__(f"{path}:{line_number}: {message}")
        self.path = path
        self.line_number = line_number


class FeatureFormatError(DataError):
    """A feature file is malformed (bad magic, inconsistent dimensions, unparsable values)."""


class UnknownEntityError(DataError):
    """A feature file names entities which are not in the vocabulary."""

    def __init__(self, names: Sequence[str]) -> None:
        """Initialise the error.

        Args:
            names (Sequence[str]): The offending entity names.
        """
        shown = ", ".join(repr(name) for name in list(names)[:20])
        more = f" (and {len(names) - 20} more)" if len(names) > 20 else ""
        super().__init__(f"Features given for {len(names)} unknown entities: {shown}{more}")
        self.names = list(names)


class DuplicateTripleError(DataError):
    """A split contains the same triple more than once."""


class DataValidationError(DataError):
    """A dataset or an argument of a dataset operation breaks an invariant."""


class DataFileError(DataError):
    """A dataset file does not exist or cannot be read."""
