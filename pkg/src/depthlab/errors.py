"""Exception types shared across the package."""


class InputError(ValueError):
    """Invalid argument, malformed data, or domain violation (CLI exit code 1)."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to converge or bracket (CLI exit code 2)."""
