"""Exception hierarchy shared across the package."""


class AhcBenchError(Exception):
    """Base class for all package errors."""


class SmilesError(AhcBenchError, ValueError):
    """A SMILES string could not be tokenized or parsed.

    Attributes:
        position: character offset in the input where the problem was found,
            or ``None`` when the error is not tied to a single position.
    """

    kind = "SmilesError"

    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class UnknownCharacter(SmilesError):
    kind = "UnknownCharacter"


class UnterminatedBracket(SmilesError):
    kind = "UnterminatedBracket"


class UnmatchedRingClosure(SmilesError):
    kind = "UnmatchedRingClosure"


class UnbalancedBranch(SmilesError):
    kind = "UnbalancedBranch"


class ValenceViolation(SmilesError):
    kind = "ValenceViolation"


class UnsupportedFeature(SmilesError):
    kind = "UnsupportedFeature"


class SmilesSyntaxError(SmilesError):
    """Structurally malformed input not covered by a more specific kind."""

    kind = "SmilesSyntaxError"


class UnknownElementMass(AhcBenchError, KeyError):
    pass


class WidthMismatch(AhcBenchError, ValueError):
    pass


class EmptyCorpus(AhcBenchError, ValueError):
    pass


class DegenerateStats(AhcBenchError, ValueError):
    pass


class IoFailure(AhcBenchError, OSError):
    pass


class ParamMismatch(AhcBenchError, ValueError):
    pass


class EmptyFingerprint(AhcBenchError, ValueError):
    pass


class BudgetExhausted(AhcBenchError, RuntimeError):
    pass


class BudgetMismatch(AhcBenchError, ValueError):
    pass


class UnknownToken(AhcBenchError, KeyError):
    pass


class ConfigError(AhcBenchError, ValueError):
    """Invalid run configuration, manifest or objective definition."""


class UnterminatedBranch(UnbalancedBranch):
    kind = "UnterminatedBranch"


class AromaticityError(SmilesError):
    """Aromatic atoms whose pi bonds cannot be assigned (not kekulizable)."""

    kind = "AromaticityError"
