"""Exception types raised across the pipeline.

Input/format problems subclass ValueError; resource-shape problems that can
only surface once training or voting is underway subclass RuntimeError so
callers can map them to distinct exit codes.
"""


class DimensionMismatch(ValueError):
    """Two vectors (or a vector and a parameter block) disagree on dimension."""


class ZeroNormVector(ValueError):
    """Cosine similarity requested against a zero-norm vector."""


class EmptyInput(ValueError):
    """An operation that needs at least one element received none."""


class ParseError(ValueError):
    """A dataset or config file failed to parse. Carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DuplicateId(ValueError):
    """Two examples in one dataset share an id."""


class InvalidLabel(ParseError):
    """A label outside {0, 1}."""


class BadMagic(ValueError):
    """Binary file does not start with the expected magic bytes."""


class VersionMismatch(ValueError):
    """Binary file has an unsupported format version."""


class TruncatedFile(ValueError):
    """Binary file payload is shorter (or longer) than its header declares."""


class KTooLarge(RuntimeError):
    """Requested more clusters than there are points to cluster."""


class EmptyCluster(RuntimeError):
    """A cluster operation received no members."""


class MissingAnchorClass(RuntimeError):
    """The anchor set does not cover both classes."""


class NonPositiveTemperature(ValueError):
    """Contrastive temperature must be strictly positive."""


class ShapeMismatch(ValueError):
    """A logit panel and weight vector (or labels) disagree on shape."""


class EmptyBatch(ValueError):
    """A policy update was requested with no episodes."""


class LengthMismatch(ValueError):
    """Predictions and labels differ in length."""
