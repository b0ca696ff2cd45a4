"""Exception hierarchy shared across the package."""


class CapflowError(Exception):
    """Base class for every error raised by capflow."""


class DomainError(CapflowError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigError(CapflowError, ValueError):
    """A scenario description is malformed or violates a model invariant."""


class ParseError(ConfigError):
    """Config text could not be parsed; carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class StabilityError(CapflowError):
    """The explicit scheme would be unstable for the requested step sizes."""

    def __init__(self, ratio, max_dt):
        self.ratio = ratio
        self.max_dt = max_dt
        super().__init__(f"cfl-violation ratio={ratio:g} max_dt={max_dt:g}")


class DivergenceError(CapflowError):
    """A non-finite or absurdly large value appeared during time stepping."""

    def __init__(self, message, step=None, node=None):
        self.step = step
        self.node = node
        super().__init__(message)


class NegativityError(CapflowError):
    """Capital went negative while the abort-on-negative policy is active."""

    def __init__(self, message, step=None, node=None, time=None):
        self.step = step
        self.node = node
        self.time = time
        super().__init__(message)
