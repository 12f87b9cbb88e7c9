"""Exception hierarchy.

Every error raised by the library derives from :class:`QSteerError`. The CLI
maps the three families below onto its exit codes.
"""


class QSteerError(Exception):
    """Base class for all library errors."""


class ValidationError(QSteerError, ValueError):
    """An input violates a documented invariant."""


class NumericalError(QSteerError, ArithmeticError):
    """A computation broke down or an internal invariant failed."""


class InfeasibleError(QSteerError):
    """The request is well formed but cannot be realized."""


# qstate-core


class NotHermitian(ValidationError):
    pass


class TraceNotOne(ValidationError):
    pass


class NotPSD(ValidationError):
    pass


class NotSquare(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class InvalidSystem(ValidationError):
    pass


class DegenerateSpectrum(InfeasibleError):
    pass


# liouville


class MissingOccupation(ValidationError):
    pass


class NonUniqueSteadyState(InfeasibleError):
    pass


# propagator


class StateInvariantViolated(NumericalError):
    pass


class StepTooCoarse(ValidationError):
    pass


class RwaUnsupportedDimension(ValidationError):
    pass


class NotUnitary(ValidationError):
    pass


# protocol


class NotDescending(ValidationError):
    pass


class DegeneratePopulations(InfeasibleError):
    pass


class ZeroDipole(InfeasibleError):
    pass


class PhysicalPulseUnsupported(InfeasibleError):
    pass


# controllability


class DepthExceeded(NumericalError):
    pass


# scenario files


class ScenarioError(ValidationError):
    """A scenario or schedule file failed to parse; the message carries the field path."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
