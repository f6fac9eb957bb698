"""Exception hierarchy for the engine.

Every error the public API can raise derives from HeartSwayError so callers
can catch the whole family at a process boundary (CLI, HTTP) and map it to
an exit code / status code.
"""


class HeartSwayError(Exception):
    """Base class for all engine errors."""


# --- signal processing ---

class EmptySeries(HeartSwayError):
    """An operation that needs at least one sample got none."""


class NonPositiveBpm(HeartSwayError):
    """A BPM reading was zero or negative."""


class NonMonotonicTime(HeartSwayError):
    """Sample timestamps went backwards (or repeated) where strict order is required."""


class SeriesTooShort(HeartSwayError):
    """Changepoint detection needs at least two points."""


# --- trace store ---

class SessionAlreadyLive(HeartSwayError):
    """begin_session while another session is still recording."""


class SessionNotLive(HeartSwayError):
    """append/finalize against a session that is not currently live."""


class SessionNotFound(HeartSwayError):
    """Unknown session id."""


class SessionPurged(HeartSwayError):
    """The session existed but its raw samples were discarded (ephemerality)."""


class DataDirLocked(HeartSwayError):
    """Another engine instance already owns the data directory."""


# --- wire protocol ---

class WireError(HeartSwayError):
    """Base class for codec and link errors."""


class PayloadTooLarge(WireError):
    """Message payload exceeds the frame payload bound."""


class BadChecksum(WireError):
    """Frame checksum mismatch."""


class UnknownType(WireError):
    """Frame carries an unknown message type byte."""


class Truncated(WireError):
    """Byte buffer does not contain exactly one complete frame."""


class TransferTimeout(WireError):
    """No Ack arrived within the retry budget."""


class NackReceived(WireError):
    """Controller rejected a page on the final attempt."""


# --- devices ---

class BackendClosed(HeartSwayError):
    """Actuation or read attempted on a closed backend."""


class DeviceOpenFailed(HeartSwayError):
    """Could not open the configured device backend."""


class InvalidScript(HeartSwayError):
    """Occupant script failed validation."""


# --- config / CLI ---

class ConfigInvalid(HeartSwayError):
    """Configuration rejected; `field` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class ParseError(HeartSwayError):
    """CSV input rejected; `line` is the 1-based offending line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


# --- API ---

class EngineUnavailable(HeartSwayError):
    """The HTTP layer has no running engine behind it."""


class UnknownCue(HeartSwayError):
    """AckCue referenced a cue id that is not pending."""


class InvalidPhase(HeartSwayError):
    """Command not valid in the engine's current phase."""
