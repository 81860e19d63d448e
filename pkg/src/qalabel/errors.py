"""Exception types shared across the package."""


class CapacityError(ValueError):
    """Raised when an exhaustive enumeration would exceed the supported class count."""


class ProtocolViolationError(ValueError):
    """Raised when an answer is inconsistent with the issued question."""


class MissingGroundTruthError(KeyError):
    """Raised when an annotator model has no class for a requested instance."""


class InconsistentPmfError(ValueError):
    """Raised when inverting a label pmf yields a point off the probability simplex."""


class IdxFormatError(ValueError):
    """Raised on malformed IDX image/label files (bad magic, truncation, count mismatch)."""


class EventStoreError(ValueError):
    """Raised on malformed or rule-violating lines in a labeling-event store."""
