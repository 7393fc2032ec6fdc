"""Exception hierarchy shared across the package.

Errors derived from ``InvalidInputError`` indicate bad user input (CLI exit
code 2); everything else under ``RelaxorError`` is a numerical failure
(CLI exit code 1).
"""


class RelaxorError(Exception):
    """Base class for all package errors."""


class InvalidInputError(RelaxorError, ValueError):
    """Invalid argument or parameter outside its admissible domain."""


class ParameterDomainError(InvalidInputError):
    """Model parameters or state violate their invariants."""


class SingularScalingError(InvalidInputError):
    """Rescaling is undefined (e.g. zero prey-2 preference)."""


class UnsupportedManifoldError(InvalidInputError):
    """Operation requested on a manifold it is not defined for."""


class BranchDomainError(InvalidInputError):
    """Lambert W argument outside the requested branch domain."""

    def __init__(self, branch, x, message=None):
        self.branch = branch
        self.x = x
        super().__init__(message or f"{branch} is undefined at x={x!r}")


class OffOrbitError(InvalidInputError):
    """Coordinate outside the extremal range of the conserved-level orbit."""


class DegenerateOrbitError(InvalidInputError):
    """Anchor sits at the center equilibrium; the level orbit is a point."""


class NoSolutionError(RelaxorError):
    """An elimination has no real solution for the requested data."""


class InconsistentEndpointsError(RelaxorError):
    """Segment endpoints do not lie on a common conserved level."""


class NonConvergenceError(RelaxorError):
    """Iterative solver failed to converge; carries last-iterate diagnostics."""

    def __init__(self, message, residual=None, iterations=None, x=None):
        self.residual = residual
        self.iterations = iterations
        self.x = x
        super().__init__(message)


class InadmissibleOrbitError(RelaxorError):
    """Converged jump points violate the up/down jump admissibility rules."""


class InconsistentJumpPairError(RelaxorError):
    """Slow segments integrated from the jump points do not close up."""


class StiffnessError(RelaxorError):
    """Adaptive integrator underflowed its step size."""


class InsufficientDataError(RelaxorError):
    """Input series does not cover enough of a period for the analysis."""
