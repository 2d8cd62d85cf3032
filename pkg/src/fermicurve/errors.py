"""Exception hierarchy.

Errors split in two families so the CLI can map them to exit codes:
``InputError`` (malformed or invalid arguments) and ``DomainError`` (well-formed
input whose physics has no answer: no curve, non-confining well, ...).
"""

from __future__ import annotations


class FermiCurveError(Exception):
    """Base class for every error raised by this package."""


class InputError(FermiCurveError, ValueError):
    """Invalid argument or malformed input data."""


class DomainError(FermiCurveError):
    """Input is well formed but the requested object does not exist."""


# numerics
class ConvergenceError(DomainError):
    def __init__(self, message: str, estimate: float):
        super().__init__(message)
        self.estimate = estimate


class InvalidBracketError(InputError):
    pass


class NumerovOverflowError(DomainError):
    def __init__(self, message: str, last_index: int):
        super().__init__(message)
        self.last_index = last_index


class DegenerateInputError(InputError):
    pass


class InsufficientGridError(InputError):
    pass


# states
class InvalidParameterError(InputError):
    pass


class RangeError(InputError):
    pass


class InvalidGaugePointError(InputError):
    pass


# fermi_map
class ShapeError(InputError):
    pass


class InsufficientSupportError(DomainError):
    pass


class NoCurveError(DomainError):
    pass


class DegenerateCurveError(NoCurveError):
    pass


class MultiWellError(DomainError):
    def __init__(self, message: str, intervals):
        super().__init__(message)
        self.intervals = list(intervals)


class InconsistencyError(DomainError):
    pass


class InvalidCurveError(InputError):
    pass


# quantization
class NotSingleWellError(DomainError):
    def __init__(self, message: str, crossings):
        super().__init__(message)
        self.crossings = list(crossings)


class BracketFailureError(DomainError):
    pass


class ConsistencyError(DomainError):
    pass


# inverse_map
class ExtensionError(DomainError):
    pass


class NotQuantizedError(DomainError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class ReconstructionError(DomainError):
    pass


# wigner
class TruncationError(DomainError):
    pass
