"""Exception hierarchy.

Every error raised on purpose by the package derives from ``ShearStabError``.
The CLI maps the three branches below onto distinct exit codes.
"""


class ShearStabError(Exception):
    """Base class for all package errors."""


class ConfigError(ShearStabError, ValueError):
    """Invalid user input: parameters, profiles, grid sizes."""


class RegimeError(ShearStabError):
    """The requested parameters lie outside the regime a method can certify."""


class NumericalError(ShearStabError, ArithmeticError):
    """A numerical step failed or produced an untrustworthy result."""


class SingularUpdateError(NumericalError):
    """Rank-one update makes the operator (numerically) singular."""

    def __init__(self, message: str, defect: float):
        super().__init__(message)
        self.defect = defect


class NearPoleError(NumericalError):
    """Resolvent requested too close to one of its poles."""

    def __init__(self, message: str, distance: float):
        super().__init__(message)
        self.distance = distance


class ContourCollisionError(NumericalError):
    """A quadrature node sits on (or next to) a spectral pole."""

    def __init__(self, message: str, node: int):
        super().__init__(message)
        self.node = node


class RankDefectError(NumericalError):
    """A spectral projection has an unexpected numerical rank."""


class NonEigenvectorError(NumericalError):
    """A candidate eigenpair has a residual above tolerance."""


class NonConvergenceError(NumericalError):
    """An iteration stopped before meeting its tolerance."""

    def __init__(self, message: str, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []


class DegenerateRegimeError(RegimeError):
    """The Kato isomorphism test failed: the two projections are too far apart."""


class NotOffDiagonalError(ShearStabError, ValueError):
    """A block operator expected to be off-diagonal has a nonzero diagonal block."""
