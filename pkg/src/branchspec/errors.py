"""Exception types shared across the toolkit."""


class BranchspecError(Exception):
    """Base class for all package errors."""


class PoleError(BranchspecError):
    """Argument too close to a pole of the Gamma function."""


class RegimeError(BranchspecError):
    """Point violates the admissibility region of an asymptotic regime."""


class SectorError(BranchspecError):
    """Point lies outside the claimed sector (with margin)."""


class DegenerateError(BranchspecError):
    """A dividing coefficient underflowed or vanished."""


class NoConvergence(BranchspecError):
    """Iteration failed to converge; carries the last iterate."""

    def __init__(self, message, last=None, residual=None):
        super().__init__(message)
        self.last = last
        self.residual = residual


class SectorEscape(BranchspecError):
    """Newton iterate left the admissible sector of its branch."""

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


class Hidden(BranchspecError):
    """Requested crossing point lies inside a forbidden region."""


class OnContourZero(BranchspecError):
    """|f| vanishes on the integration contour even after perturbation."""


class NotAdmissible(BranchspecError):
    """Curve violates an admissibility clause (named in the message)."""


class BijectionFailure(BranchspecError):
    """Zero matching is not a distance-bounded bijection."""

    def __init__(self, message, unmatched_left=(), unmatched_right=(), bad_pairs=()):
        super().__init__(message)
        self.unmatched_left = list(unmatched_left)
        self.unmatched_right = list(unmatched_right)
        self.bad_pairs = list(bad_pairs)


class NotInvariant(BranchspecError):
    """Expression is not invariant under the periodic flow."""


class DegenerateInput(BranchspecError):
    """Classification parameters violate a nondegeneracy clause."""

    def __init__(self, message, clause=None):
        super().__init__(message)
        self.clause = clause


class Mismatch(BranchspecError):
    """Numerical verification disagrees with a symbolic report."""

    def __init__(self, message, discrepancies=()):
        super().__init__(message)
        self.discrepancies = list(discrepancies)


class NoLoop(BranchspecError):
    """No homoclinic loop exists for the requested parameters."""


class NonConvergence(BranchspecError):
    """Dense eigensolver failed to converge."""


class CellBudgetExceeded(BranchspecError):
    """Quadrisection exceeded its cell budget; partial results attached."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
