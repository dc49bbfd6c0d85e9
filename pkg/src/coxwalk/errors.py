"""Exception hierarchy shared by the library and the command line."""


class CoxwalkError(Exception):
    """Base class for all library errors."""


class InvalidInputError(CoxwalkError, ValueError):
    """Malformed arguments: bad root type, player index, game id, score length."""


class InfeasibleScoreError(CoxwalkError):
    """The requested score sequence is not realised by any tournament."""


class CapExceededError(CoxwalkError):
    """An exhaustive computation was requested above the configured size cap."""

    def __init__(self, message: str, required_cap: int):
        super().__init__(message)
        self.required_cap = required_cap


class NotNeutralError(CoxwalkError, ValueError):
    """A neutral sub-tournament or Z-frame was required."""

    def __init__(self, message: str, player: int | None = None):
        super().__init__(message)
        self.player = player


class LemmaViolation(CoxwalkError, AssertionError):
    """A structural claim about interchange graphs failed on concrete data.

    Raised instead of silently continuing whenever a computed object does not
    have the shape the theory predicts (non-regular fiber, unclassifiable
    network, non-bijective edge pairing, non-contracting coupling, ...).
    """
