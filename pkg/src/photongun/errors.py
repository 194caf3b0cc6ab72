"""Exception types shared across photongun."""


class DomainError(ValueError):
    """A parameter lies outside the domain of the model."""


class InsufficientDataError(ValueError):
    """Too few events or bins for the requested estimator."""


class SingularGeometryError(ValueError):
    """The dataset cannot identify all free fit parameters."""


class TimestampFormatError(ValueError):
    """A timestamp file does not parse under the declared format."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ScenarioError(ValueError):
    """Scenario file failed validation."""

    def __init__(self, message, line=None, key=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        if where:
            message = f"{', '.join(where)}: {message}"
        super().__init__(message)
        self.line = line
        self.key = key


class ConvergenceError(RuntimeError):
    """A fit did not converge."""
