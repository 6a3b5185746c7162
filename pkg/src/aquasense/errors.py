"""Exception hierarchy shared by every stage of the telemetry pipeline."""

from __future__ import annotations


class AquaSenseError(Exception):
    """Base class for all errors raised by this package."""


# -- frame codec -------------------------------------------------------------


class FrameError(AquaSenseError, ValueError):
    """A frame line could not be encoded or parsed.

    ``field`` names the offending field and ``offset`` the byte offset in the
    line, whichever is known.
    """

    def __init__(self, message: str, *, field: str | None = None, offset: int | None = None):
        super().__init__(message)
        self.field = field
        self.offset = offset


class InvalidFrame(FrameError):
    """A SensorFrame handed to the encoder violates an invariant."""


class MalformedSyntax(FrameError):
    pass


class BadChecksum(FrameError):
    pass


class RangeViolation(FrameError):
    pass


class LineTooLong(FrameError):
    pass


# -- calibration / assessment ------------------------------------------------


class ConfigError(AquaSenseError, ValueError):
    pass


class ValidationError(AquaSenseError, ValueError):
    """A calibrated value fell outside its physical range."""

    def __init__(self, message: str, *, channel: str | None = None):
        super().__init__(message)
        self.channel = channel


class DomainError(AquaSenseError, ValueError):
    def __init__(self, message: str, *, channel: str | None = None):
        super().__init__(message)
        self.channel = channel


class DegenerateCalibration(AquaSenseError, ValueError):
    pass


# -- aggregation -------------------------------------------------------------


class StaleSequence(AquaSenseError):
    def __init__(self, device_id: str, seq: int, last_seq: int):
        super().__init__(f"{device_id}: seq {seq} is not newer than {last_seq}")
        self.device_id = device_id
        self.seq = seq
        self.last_seq = last_seq


class EmptyInput(AquaSenseError, ValueError):
    pass


# -- simulator ---------------------------------------------------------------


class InversionOutOfRange(AquaSenseError, ValueError):
    def __init__(self, message: str, *, channel: str | None = None):
        super().__init__(message)
        self.channel = channel


class FixtureParseError(AquaSenseError, ValueError):
    def __init__(self, message: str, *, row: int | None = None):
        super().__init__(f"row {row}: {message}" if row is not None else message)
        self.row = row


class ConnectionRefused(AquaSenseError, ConnectionRefusedError):
    def __init__(self, endpoint: str, attempts: int):
        super().__init__(f"could not connect to {endpoint} after {attempts} attempt(s)")
        self.endpoint = endpoint
        self.attempts = attempts


# -- gateway -----------------------------------------------------------------


class BindFailure(AquaSenseError, OSError):
    pass


class PersistenceFailure(AquaSenseError, OSError):
    def __init__(self, path, reason: str):
        super().__init__(f"{path}: {reason}")
        self.path = path


class CorruptLog(AquaSenseError, ValueError):
    def __init__(self, path, line_no: int, reason: str):
        super().__init__(f"{path}:{line_no}: {reason}")
        self.path = path
        self.line_no = line_no
