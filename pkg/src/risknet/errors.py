"""Exception types shared across the package.

Validation problems subclass ``ValueError`` so callers can treat them as bad
input; numerical failures derive from :class:`NumericalError` and map to exit
code 4 in the command-line tool.
"""


class RiskNetError(Exception):
    pass


class NumericalError(RiskNetError):
    pass


class DimensionMismatch(RiskNetError, ValueError):
    pass


class NotDoublyStochastic(NumericalError, ValueError):
    pass


class NotRowStochastic(RiskNetError, ValueError):
    pass


class NotSymmetric(RiskNetError, ValueError):
    pass


class NoTotalSupport(NumericalError):
    pass


class ZeroLine(NumericalError):
    """A row or column of the matrix sums to (numerically) zero."""


class MatchingFailure(NumericalError):
    pass


class NotMajorized(RiskNetError, ValueError):
    pass


class RhoOutOfRange(RiskNetError, ValueError):
    pass


class NonPositiveWeight(RiskNetError, ValueError):
    pass


class IsolatedNode(RiskNetError, ValueError):
    pass


class InvalidSpec(RiskNetError, ValueError):
    pass


class RegularGenerationFailure(RiskNetError):
    pass


class InvalidRule(RiskNetError, ValueError):
    pass
