"""Exception hierarchy shared by all modules."""


class SeqPovmError(Exception):
    """Base class for every error raised by this package."""


class StructuralError(SeqPovmError, ValueError):
    """Malformed input: wrong shapes, mismatched dimensions, non-finite entries."""


class ValidationError(SeqPovmError):
    """A measurement set violates completeness, normality or commutativity."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class DiagonalizationError(SeqPovmError):
    pass


class AmbiguityError(SeqPovmError):
    """Phase-equivalence grouping is not transitive at the requested tolerance."""


class ZeroProbabilityError(SeqPovmError):
    pass


class InvalidStateError(SeqPovmError, ValueError):
    pass


class NotApplicableError(SeqPovmError):
    """An analysis is undefined for the given structure (e.g. a single group)."""


class EnumerationTooLargeError(SeqPovmError):
    pass


class NeighborhoodOverlapError(SeqPovmError):
    pass


class UnclassifiableError(SeqPovmError):
    pass


class MisclassificationError(SeqPovmError):
    pass
