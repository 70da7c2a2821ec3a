"""
Errors
======

Exception hierarchy shared by every module. Each class carries a
machine-readable ``category`` that the experiment runner prints and maps
to an exit code.
"""


class InverseFilterError(ValueError):
    """Base class for all library errors."""

    category = "error"
    exit_code = 1


class InvalidGeneratorError(InverseFilterError):
    category = "invalid-generator"
    exit_code = 10


class InvalidSizeError(InverseFilterError):
    category = "invalid-size"
    exit_code = 11


class InvalidInputError(InverseFilterError):
    category = "invalid-input"
    exit_code = 12


class DegreeZeroError(InverseFilterError):
    category = "degree-zero"
    exit_code = 13


class SizeCapError(InverseFilterError):
    category = "size-cap"
    exit_code = 14


class DimensionMismatchError(InverseFilterError):
    category = "dimension-mismatch"
    exit_code = 15


class ReciprocalSingularityError(InverseFilterError):
    category = "reciprocal-singularity"
    exit_code = 20


class DivergenceError(InverseFilterError):
    category = "divergence"
    exit_code = 21


class IndefiniteFilterError(InverseFilterError):
    category = "indefinite-filter"
    exit_code = 22


class UndefinedErrorError(InverseFilterError):
    """Relative error requested against an all-zero ground truth."""

    category = "undefined-error"
    exit_code = 23


class InvalidPenaltyError(InverseFilterError):
    category = "invalid-penalty"
    exit_code = 30


class UndefinedNormalizationError(InverseFilterError):
    category = "undefined-normalization"
    exit_code = 31


class ZeroReferenceError(InverseFilterError):
    category = "zero-reference"
    exit_code = 32


class InvalidConfigError(InverseFilterError):
    category = "invalid-config"
    exit_code = 40
