"""Exception types shared across the package."""


class HshapError(Exception):
    """Base class for every error raised by this package."""


class InvalidParams(HshapError, ValueError):
    """A parameter is outside its documented domain."""


class DegenerateRegion(HshapError, ValueError):
    """A region of area <= 1 cannot be split further."""


class PlayerLimitExceeded(HshapError, ValueError):
    """Exhaustive coalition enumeration was requested for too many players."""


class OracleFailure(HshapError, RuntimeError):
    """A characteristic-function evaluation failed."""


class EmptyDataset(HshapError, ValueError):
    """An operation that folds over samples received none."""


class ShapeMismatch(HshapError, ValueError):
    """Arrays that must share a shape do not."""


class OutOfBounds(HshapError, IndexError):
    """A region lies (partly) outside the input bounds."""


class LengthMismatch(HshapError, ValueError):
    """Two vectors that must have equal length do not."""


class PackingFailure(HshapError, RuntimeError):
    """Non-overlapping shape placement failed after bounded retries."""


class ZeroVector(HshapError, ValueError):
    """Cosine similarity is undefined for a zero vector."""


class BridgeError(OracleFailure):
    """Base class for external model-server failures."""


class BridgeTimeout(BridgeError):
    """The model server did not answer within the configured timeout."""


class ProtocolError(BridgeError):
    """The model server sent a malformed or mismatched frame."""


class ServerCrashed(BridgeError):
    """The model server process exited while a reply was pending."""
