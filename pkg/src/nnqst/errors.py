"""Exception hierarchy for nnqst."""


class QSTError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(QSTError, ValueError):
    """Input failed a precondition."""


class DimensionMismatch(ValidationError):
    pass


class NotHermitian(ValidationError):
    pass


class NotPhysical(ValidationError):
    """A matrix violates a density-matrix invariant."""


class ZeroMatrix(ValidationError):
    pass


class OutOfRange(ValidationError):
    pass


class TooLarge(ValidationError):
    pass


class InvalidProbabilities(ValidationError):
    pass


class EmptyInput(ValidationError):
    pass


class InsufficientData(ValidationError):
    pass


class MissingModel(ValidationError):
    pass


class FormatError(ValidationError):
    """A file does not match its declared schema."""


class VersionMismatch(FormatError):
    pass


class ShapeMismatch(FormatError):
    pass


class NoConvergence(QSTError, RuntimeError):
    pass


class DegenerateSample(QSTError, RuntimeError):
    pass


class Diverged(QSTError, RuntimeError):
    pass
