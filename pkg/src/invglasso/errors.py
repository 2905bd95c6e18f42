"""Exception types shared across the package."""


class InvglassoError(Exception):
    """Base class for all package-specific errors."""


class DomainError(InvglassoError):
    """Input violates a mathematical domain requirement.

    Raised for non-compositional vectors (negative entries, sum far from
    one), non-symmetric or non-positive-definite matrices where those
    properties are required, counts with negative entries, and similar.
    """


class LayoutError(InvglassoError):
    """Coordinate layout is inconsistent with the requested operation.

    A layout maps log-ratio coordinates to taxon indices.  This error is
    raised when a layout does not cover the expected taxa, repeats a
    taxon, includes the current reference, or disagrees with the layout
    an operator derivation produces.
    """


class NumericalError(InvglassoError):
    """A numeric routine could not certify its result.

    Raised when a solver exhausts its iteration budget without meeting
    its convergence criterion, when a matrix that must be invertible is
    numerically singular, and in similar situations.  Callers that can
    tolerate approximate results should catch this explicitly.
    """


class ParseError(InvglassoError):
    """A data file could not be parsed.

    Messages name the offending line (1-based, counting the header) and,
    where possible, the cell, so the file can be fixed by hand.
    """


class EmptyDataError(InvglassoError):
    """An operation removed or received every sample."""


class SchemaError(InvglassoError):
    """Serialized artifact does not match the expected schema."""
