"""Exception taxonomy for momentmap.

Everything numerical that can go wrong raises one of these, so callers can
tell an infeasible downdate apart from a malformed factor file without
string-matching messages.
"""


class MomentMapError(Exception):
    """Base class for all momentmap-specific errors."""


class NotPositiveDefinite(MomentMapError):
    """A Cholesky pivot came out non-positive."""


class AsymmetricInput(MomentMapError):
    """A matrix that must be symmetric exceeds the symmetry tolerance."""


class DowndateBreaksDefiniteness(MomentMapError):
    """Rank-1 downdate would leave the matrix indefinite (hyperbolic
    rotation cosine would be imaginary)."""


class UnsupportedDimension(MomentMapError):
    """No analytic factor construction exists for the requested dimension."""


class NoConvergence(MomentMapError):
    """Iterative fit failed to reach the requested tolerance.

    Attributes
    ----------
    best_residual : float or None
        Smallest residual seen across all restarts.
    asymmetric_fit_lost : bool
        True when an unsymmetrized fit did reach the tolerance but the
        symmetrized candidate did not.
    """

    def __init__(self, message, best_residual=None, asymmetric_fit_lost=False):
        super().__init__(message)
        self.best_residual = best_residual
        self.asymmetric_fit_lost = asymmetric_fit_lost


class MalformedFile(MomentMapError):
    """A factor file could not be parsed."""


class FailedInvariant(MomentMapError):
    """Loaded or constructed data violates a structural invariant."""


class OriginSingularity(MomentMapError):
    """Polar derivatives requested too close to the coordinate origin."""


class IntegrationDiverged(MomentMapError):
    """A trajectory left the finite floating-point range."""
