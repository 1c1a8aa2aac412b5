"""Exception types raised across the pipeline."""


class FceSchedError(Exception):
    """Base class for all package errors."""


class ConfigError(FceSchedError, ValueError):
    pass


class EmptyInputError(FceSchedError, ValueError):
    pass


class DimensionError(FceSchedError, ValueError):
    pass


class SizeError(FceSchedError, ValueError):
    pass


class ParseError(FceSchedError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InfeasibleError(FceSchedError, ValueError):
    """A bitstring or result set violates the one-hot constraint."""

    def __init__(self, message: str, orders: list[int] | None = None):
        self.orders = list(orders or [])
        super().__init__(message)
