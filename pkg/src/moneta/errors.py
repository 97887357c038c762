"""Exception hierarchy shared across the engine."""


class MonetaError(Exception):
    """Base class for all engine errors."""


# --- value algebra ---

class InsufficientPosition(MonetaError):
    """An annihilation asked for more asset or liability than is held."""


# --- ownership ledger ---

class NotController(MonetaError):
    """Agent does not control the resource identifier."""


class InsufficientBalance(MonetaError):
    """Source balance does not cover the transferred bundle."""


class TokenImmutable(MonetaError):
    """Balance-based transfer attempted on a token-kind resource."""


class NegativeEntry(MonetaError):
    """A transferred bundle carries a liability (negative entry)."""


class ValueMismatch(MonetaError):
    """Retired and issued token values do not sum to the same bundle."""


class UnknownFact(MonetaError):
    """Communication of a fact the sender does not know."""


class NotIssuer(MonetaError):
    """Fiat mint attempted by an agent that is not the registered issuer."""


class PrivacyViolation(MonetaError):
    """Balance query by an observer the resource's privacy tag excludes."""


# --- contracts ---

class RejectedEvent(MonetaError):
    """Event not permitted by the contract in its current state."""


# --- transactions ---

class WrongPhase(MonetaError):
    """Transaction protocol step applied in a phase that does not allow it."""


# --- banking ---

class ReserveBreach(MonetaError):
    """Operation would push reserves below the required ratio."""


class UnderFunded(MonetaError):
    """Invoice financing never reached its threshold; deal aborted."""


# --- scenario DSL ---

class ScenarioError(MonetaError):
    """Parse or execution error in a scenario file, with position info."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ScenarioSyntaxError(ScenarioError):
    pass


class UndeclaredId(ScenarioError):
    pass


class DuplicateId(ScenarioError):
    pass
