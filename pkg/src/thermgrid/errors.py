"""Exception hierarchy.

Every error raised on purpose by the package derives from ``ThermGridError`` so
the CLI can map it to an exit code without catching unrelated failures.
"""


class ThermGridError(Exception):
    """Base class for all package errors."""


class ScenarioError(ThermGridError):
    """Problem with the simulation input (CLI exit code 3)."""


class UnknownMaterial(ScenarioError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class InvalidProperty(ScenarioError, ValueError):
    pass


class AlignmentError(ScenarioError):
    pass


class EmptyScenario(ScenarioError):
    pass


class PresetSpacingError(ScenarioError):
    pass


class PlacementError(ScenarioError):
    pass


class EmptyRegion(ScenarioError):
    pass


class NoTerminals(ScenarioError):
    pass


class FloatingTerminal(ScenarioError):
    pass


class FloatingComponent(ScenarioError):
    """A conducting component holds heat sources but touches no sink."""

    def __init__(self, message, size=0):
        super().__init__(message)
        self.size = size


class FieldMismatch(ThermGridError, ValueError):
    pass


class UnitMismatch(ThermGridError, ValueError):
    pass


class AmbientMismatch(ThermGridError, ValueError):
    pass


class NoResponse(ThermGridError):
    pass


class IoError(ThermGridError, OSError):
    """Export or import of a file failed."""


class SolverDivergence(ThermGridError):
    """Iterative solve hit its iteration cap (CLI exit code 2)."""

    def __init__(self, message, residual=float("nan"), iterations=0, x=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
        self.x = x
