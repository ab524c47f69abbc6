"""Exception types raised across the package."""


class InvalidArgument(ValueError):
    """An argument violates an operation's precondition."""


class NumericalError(ArithmeticError):
    """A factorization or decomposition failed."""


class ParseError(ValueError):
    """A file could not be parsed.

    ``lineno`` is 1-based, or ``None`` when the error is not tied to a line.
    """

    def __init__(self, message, lineno=None, path=None):
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if lineno is not None:
            where += f"{lineno}:"
        super().__init__(f"{where} {message}" if where else message)


class ConfigError(ValueError):
    """An experiment config is missing a key, has an unknown key, or a bad value."""
