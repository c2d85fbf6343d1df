"""Exception hierarchy shared across the package.

The CLI maps these onto distinct exit codes: ParseError -> 2,
ValidationError -> 3, UndefinedMetricError -> 4.
"""


class GraphCalibError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(GraphCalibError):
    """A file could not be parsed. Carries the offending path and line."""

    def __init__(self, message, path=None, line=None):
        loc = ""
        if path is not None:
            loc = f"{path}: "
            if line is not None:
                loc = f"{path}:{line}: "
        super().__init__(f"{loc}{message}")
        self.path = path
        self.line = line


class ValidationError(GraphCalibError):
    """Inputs are structurally readable but violate a contract."""


class UndefinedMetricError(GraphCalibError):
    """The requested quantity is undefined on this input (e.g. empty set)."""
