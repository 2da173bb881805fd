"""Exception hierarchy.

Each exception carries the CLI exit status it maps to, so the runner can
translate failures without a lookup table.
"""


class TachyonError(Exception):
    exit_code = 1


class ConfigurationError(TachyonError, ValueError):
    exit_code = 2


class NumericalGuardError(TachyonError, RuntimeError):
    """A numerical safety monitor tripped (truncation, boundary, stability)."""

    exit_code = 3


class StatisticsError(TachyonError, RuntimeError):
    exit_code = 4


class DomainTooSmallError(NumericalGuardError):
    pass


class DegenerateStateError(NumericalGuardError):
    pass


class IllConditionedPacketError(NumericalGuardError):
    pass


class ExceptionalPointError(ConfigurationError):
    pass


class ComplexBandError(ConfigurationError):
    pass


class TruncationError(NumericalGuardError):
    pass


class InconclusiveScatteringError(NumericalGuardError):
    pass


class InsufficientDataError(NumericalGuardError):
    pass


class ProtocolRegimeError(NumericalGuardError):
    pass


class ResolutionError(NumericalGuardError):
    pass


class StabilityError(NumericalGuardError):
    pass
