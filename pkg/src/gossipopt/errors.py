"""Exception hierarchy shared by all gossipopt modules."""


class GossipError(Exception):
    """Base class for every error raised by gossipopt."""


class DomainViolation(GossipError, ValueError):
    """A point lies outside (or on the boundary of) an open objective domain."""


class ConfigInvalid(GossipError, ValueError):
    """An objective descriptor, topology, scheduler or experiment config is malformed."""


class NumericalFailure(GossipError, ArithmeticError):
    """Base class for root-finding failures."""


class BracketInvalid(NumericalFailure):
    """The residual does not change sign from <= 0 to >= 0 across the bracket.

    For the residuals used here this only happens when a derivative is not
    monotone, i.e. the objective is not strictly convex.
    """


class MaxIterExceeded(NumericalFailure):
    """Bisection ran out of halvings before reaching the width tolerance."""


class ScheduleExhausted(GossipError, IndexError):
    """A scripted schedule or topology was queried past its end, or no pair is eligible."""


class InvariantViolation(GossipError, AssertionError):
    """A runtime invariant check failed during verification.

    Attributes
    ----------
    invariant : str
        Short machine-readable name of the failed invariant.
    k : int or None
        Iteration at which the violation was detected.
    """

    def __init__(self, invariant, message, k=None):
        super().__init__(f"{invariant}: {message}" + ("" if k is None else f" (k={k})"))
        self.invariant = invariant
        self.k = k
