"""Exception hierarchy shared by the library and the CLI.

Each class carries a short machine-parsable ``category`` used by the CLI
to pick an exit code and print a one-line error.
"""


class SeisError(Exception):
    """Base class for all errors raised by seisrestore."""

    category = "error"


class ParameterError(SeisError):
    """An argument violates a documented precondition."""

    category = "parameter"


class ConfigError(SeisError):
    """A configuration object or file is inconsistent."""

    category = "config"


class MissingInputError(SeisError):
    """A referenced input file or directory does not exist."""

    category = "missing-input"


class FormatError(SeisError):
    """A binary file does not conform to its on-disk format.

    ``code`` distinguishes the failure: ``bad-magic``, ``bad-version``,
    ``truncated`` or ``non-finite``.
    """

    category = "format"

    def __init__(self, code, message):
        super().__init__(message)
        self.code = code
