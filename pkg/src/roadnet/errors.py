"""Exception hierarchy shared by every roadnet module."""


class RoadnetError(Exception):
    """Base class for all roadnet errors."""


class GeometryError(RoadnetError):
    """Malformed or intersecting pattern geometry."""


class ParameterError(RoadnetError, ValueError):
    """A numeric parameter is out of its admissible range."""


class PatternFileError(RoadnetError):
    """A pattern file could not be parsed or does not match the schema."""

    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class MeshingError(RoadnetError):
    """Mesh generation could not satisfy its quality or conformity contract."""


class SolverError(RoadnetError):
    """An iterative solve failed to converge."""

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


class AssemblyError(RoadnetError):
    """An assembled system violates a structural invariant."""


class DomainError(RoadnetError, ValueError):
    """An operation was applied outside its domain (e.g. a disconnected graph)."""


class DegenerateInputError(RoadnetError, ValueError):
    """Input for which the requested quantity is undefined (e.g. a zero seminorm)."""
