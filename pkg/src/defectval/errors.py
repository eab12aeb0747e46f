"""Exception types raised across the package."""

from __future__ import annotations


class DefectValError(Exception):
    """Base class for every error raised by defectval."""


# dataset
class MissingColumn(DefectValError):
    pass


class BadValue(DefectValError):
    def __init__(self, message: str, *, line: int | None = None, column: str | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
        self.column = column


class SchemaMismatch(DefectValError):
    pass


class EmptyInput(DefectValError):
    pass


class TooFewReleases(DefectValError):
    pass


class ManifestError(DefectValError):
    pass


# classifiers
class DegenerateData(DefectValError):
    pass


class WidthMismatch(DefectValError):
    pass


class InvalidParameter(DefectValError):
    pass


# metrics
class SingleClass(DefectValError):
    pass


# validation
class TooFewRows(DefectValError):
    pass


class ExhaustedRetries(DefectValError):
    pass


class AllRunsSkipped(DefectValError):
    pass


class BudgetExceeded(DefectValError):
    pass


# meta-validation
class SingleClassTestRelease(DefectValError):
    pass


class AllExcluded(DefectValError):
    pass


# stats
class AllZeroDifferences(DefectValError):
    pass


class ZeroVariance(DefectValError):
    pass


class TooFew(DefectValError):
    pass


class Degenerate(DefectValError):
    pass


# harness
class ConfigError(DefectValError):
    pass


class UnknownFormat(DefectValError):
    pass
