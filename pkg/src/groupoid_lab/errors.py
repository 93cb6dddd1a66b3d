"""Exception hierarchy shared by every module."""


class GroupoidLabError(Exception):
    """Base class for all library errors."""


class InvalidInput(GroupoidLabError, ValueError):
    """Malformed argument: bad symbol, bad bound, mismatched alphabets or groups."""


class CompositionError(GroupoidLabError):
    """Two arrows are not composable."""


class DomainError(GroupoidLabError):
    """A point lies outside the domain of a partial map."""


class WindowOverflow(GroupoidLabError):
    """A composite would leave the configured index window."""


class DepthInsufficient(GroupoidLabError):
    """The truncation depth is too small to realise the requested object."""


class ConditioningOnNull(GroupoidLabError):
    """Attempted to condition a measure on a set of mass zero."""


class InvalidCover(GroupoidLabError):
    """A declared cover does not cover, or its ranges escape the target."""


class ChainError(GroupoidLabError):
    """A quotient chain violates normality, surjectivity or monotonicity.

    ``witness`` carries the offending data (typically a generator word).
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class InfeasibleSystem(GroupoidLabError):
    """A linear system has no solution.

    ``combination`` maps constraint indices to the rational coefficients of a
    combination that reduces to ``0 = nonzero``.
    """

    def __init__(self, message, combination, rhs):
        super().__init__(message)
        self.combination = combination
        self.rhs = rhs
