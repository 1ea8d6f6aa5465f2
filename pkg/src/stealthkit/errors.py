"""Exception hierarchy. Each class carries the CLI exit code for its kind."""


class StealthKitError(Exception):
    exit_code = 1


class EntropyError(StealthKitError):
    """The entropy source returned fewer bytes than requested."""

    exit_code = 12


class FormatError(StealthKitError, ValueError):
    """Malformed key, meta-address or encoded value."""

    exit_code = 3


class GrammarError(FormatError):
    pass


class LengthError(FormatError):
    pass


class PrefixError(FormatError):
    pass


class OffCurveError(FormatError):
    exit_code = 4


class UnsupportedSchemeError(FormatError):
    exit_code = 10


class DegenerateSecretError(StealthKitError):
    """Shared secret hashed to zero (or was the identity); pick a new ephemeral key."""

    exit_code = 11


class DataError(StealthKitError):
    """A stored record could not be parsed."""

    exit_code = 7

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class AppendError(StealthKitError):
    exit_code = 8


class RangeError(StealthKitError, IndexError):
    exit_code = 9


class AuthorizationError(StealthKitError):
    exit_code = 5


class NotFoundError(StealthKitError, LookupError):
    exit_code = 6


class LockedError(StealthKitError):
    exit_code = 13


class UndefinedPriorityError(StealthKitError):
    """Priority factor requested for a user with no announcements."""

    exit_code = 14


class AlreadyExistsError(StealthKitError):
    exit_code = 15
