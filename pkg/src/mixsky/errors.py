"""Exception hierarchy.

Each class carries the process exit code the CLI maps it to:
1 usage/IO, 2 validation, 3 numerical failure.
"""


class MixskyError(Exception):
    exit_code = 1


class ValidationFailure(MixskyError):
    exit_code = 2


class NumericalFailure(MixskyError):
    exit_code = 3


class NonHermitian(ValidationFailure):
    pass


class UnknownFactor(MixskyError):
    pass


class LabelCollision(MixskyError):
    pass


class WrongFactorShape(ValidationFailure):
    pass


class ShapeMismatch(ValidationFailure):
    pass


class DimensionMismatch(ValidationFailure):
    pass


class InsufficientPositiveSpectrum(ValidationFailure):
    pass


class NonOrthogonalModes(ValidationFailure):
    pass


class NonOrthonormalInput(ValidationFailure):
    pass


class PhaseWithConjugation(ValidationFailure):
    pass


class NotCoefficientForm(ValidationFailure):
    pass


class RankExceedsDimension(ValidationFailure):
    pass


class EdgeBinsTooLarge(ValidationFailure):
    pass


class NotUnitary(ValidationFailure):
    pass


class TooManyUndefinedPoints(NumericalFailure):
    pass


class FormatError(MixskyError):
    """Malformed or unreadable input file."""
