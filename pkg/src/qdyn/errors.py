"""Exception types raised by the toolkit."""


class QdynError(ValueError):
    """Base class for all toolkit errors."""


class DimensionError(QdynError):
    """Operand shapes do not match the declared dimensions."""


class NotHermitianError(QdynError):
    pass


class InvalidStateError(QdynError):
    """A vector or matrix violates the pure-state / density-operator invariants."""


class InconsistentEnsembleError(QdynError):
    """An ensemble does not mix to the density operator it is paired with."""


class IsometryError(QdynError):
    """A constructed isometry failed its orthonormality check (degenerate input)."""


class NotCompletelyPositiveError(QdynError):
    """The Choi matrix has a negative eigenvalue, so no operator-sum form exists."""


class ZeroProbabilityError(QdynError):
    """A projective outcome has zero probability; no post-measurement state exists."""


class NotSpacelikeError(QdynError):
    pass


class IntegrationMismatchError(QdynError):
    """The exponential and Runge-Kutta propagators disagree."""


class OutcomeError(QdynError):
    """An outcome index does not label an element of the measurement basis."""
