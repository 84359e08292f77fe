"""Exception types shared across the package."""


class SgiError(Exception):
    """Base class for all package errors."""


class MissingFileError(SgiError):
    pass


class DimensionMismatchError(SgiError):
    pass


class UnmappedCategoryError(SgiError):
    pass


class SourceTooSmallError(SgiError):
    pass


class RectOutOfBoundsError(SgiError):
    pass


class InstanceNotFoundError(SgiError):
    pass


class ManifestError(SgiError):
    """Raised on a malformed manifest line; carries the 1-based line number."""

    def __init__(self, message, line_number=None):
        super().__init__(message)
        self.line_number = line_number


class SingularTransformError(SgiError):
    pass


class EmptyHoleError(SgiError):
    pass


class NonFiniteLossError(SgiError):
    """Raised when a loss term goes non-finite; names the offending term."""

    def __init__(self, term, value=None):
        super().__init__(f"non-finite loss term: {term}" + (f" ({value})" if value is not None else ""))
        self.term = term


class TooFewSamplesError(SgiError):
    pass
